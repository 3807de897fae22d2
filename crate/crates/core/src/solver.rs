//! Damped Newton and homotopy continuation for `F[A(u)] = ψ_t(ξ, u, τ)`.
//!
//! The Jacobian is the exact derivative of the discrete residual. Each row is
//! obtained by forward-mode differentiation of the node-local residual in its
//! local variables (`u`, the first partials and the second partials at the
//! node) and chained through the stencil weights.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::geometry::{local_geometry, InducedGeometry};
use crate::grid::{second_op, Mat2, ScalarField, SpherePoint, SphereGrid};
use crate::monitor::{check_bounds, BoundReport};
use crate::par::map_indexed;
use crate::prescription::{
    scan_barriers_with, BarrierScanFailure, Barriers, HomotopyPrescription, Prescription, ReferencePrescription,
    ScanSettings,
};
use crate::real::{Dual, Real};
use crate::symmetric::{binomial, matrix_sigmas};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Damping {
    /// Step-length reduction factor per backtrack.
    pub shrink: f64,
    /// Smallest step length tried before the line search gives up.
    pub min_step: f64,
    /// Required relative decrease `1 − c·α` of the residual sup-norm.
    pub sufficient_decrease: f64,
}

impl Default for Damping {
    fn default() -> Self {
        Damping { shrink: 0.5, min_step: 1.0 / 1024.0, sufficient_decrease: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub k: usize,
    /// Power of the reference prescription `Ψ = τ^p u tanh u`.
    pub p: f64,
    pub tol_newton: f64,
    pub max_newton: usize,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub dt_growth: f64,
    /// Steps converging in at most this many iterations enlarge `dt`.
    pub fast_iters: usize,
    pub damping: Damping,
    pub c_tau: f64,
    pub c_a: f64,
    /// Continuation stops here; `0` gives a single solve at the start.
    pub t_final: f64,
    pub scan: ScanSettings,
    /// Directional Jacobian check on every n-th accepted state (`0` disables).
    pub jacobian_check_every: usize,
    pub jacobian_check_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 2,
            p: 2.0,
            tol_newton: 1e-10,
            max_newton: 30,
            dt_init: 0.1,
            dt_min: 1e-3,
            dt_max: 0.5,
            dt_growth: 1.5,
            fast_iters: 4,
            damping: Damping::default(),
            c_tau: 10.0,
            c_a: 10.0,
            t_final: 1.0,
            scan: ScanSettings::default(),
            jacobian_check_every: 10,
            jacobian_check_tol: 1e-5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.p > 1.0) {
            return bad(format!("reference power p must exceed 1, got {}", self.p));
        }
        if !(self.tol_newton > 0.0) {
            return bad(format!("tol_newton must be positive, got {}", self.tol_newton));
        }
        if self.max_newton == 0 {
            return bad("max_newton must be at least 1".into());
        }
        if !(0.0 < self.dt_min && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max && self.dt_max <= 1.0) {
            return bad(format!(
                "need 0 < dt_min <= dt_init <= dt_max <= 1, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            ));
        }
        if !(self.dt_growth >= 1.0) {
            return bad(format!("dt_growth must be >= 1, got {}", self.dt_growth));
        }
        let d = &self.damping;
        if !(0.0 < d.shrink && d.shrink < 1.0 && 0.0 < d.min_step && d.min_step <= 1.0) {
            return bad("damping needs 0 < shrink < 1 and 0 < min_step <= 1".into());
        }
        if !(0.0 <= d.sufficient_decrease && d.sufficient_decrease < 1.0) {
            return bad("damping.sufficient_decrease must lie in [0, 1)".into());
        }
        if !(self.c_tau >= 1.0 && self.c_a > 0.0) {
            return bad("c_tau must be >= 1 and c_a positive".into());
        }
        if !(0.0..=1.0).contains(&self.t_final) {
            return bad(format!("t_final must lie in [0, 1], got {}", self.t_final));
        }
        if !(self.jacobian_check_tol > 0.0) {
            return bad("jacobian_check_tol must be positive".into());
        }
        Ok(())
    }
}

/// Root of `x cosh^p x = 1` in `(0, 1)` by bisection.
pub fn initial_constant(p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("initial constant needs p >= 1, got {p}")));
    }
    let phi = |x: f64| x * x.cosh().powf(p) - 1.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok(if phi(lo).abs() <= phi(hi).abs() && phi(lo).abs() <= phi(mid).abs() {
        lo
    } else if phi(hi).abs() <= phi(mid).abs() {
        hi
    } else {
        mid
    })
}

/// Zeroth-order coefficient of the linearisation at the umbilic start,
/// `cosh⁻²u − cosh^p u tanh u − u cosh^{p−2} u − p u cosh^{p−1} u tanh u sinh u`.
pub fn zeroth_coefficient_at_start(p: f64) -> Result<f64> {
    let u = initial_constant(p)?;
    let (c, s, t) = (u.cosh(), u.sinh(), u.tanh());
    let coef = c.powi(-2) - c.powf(p) * t - u * c.powf(p - 2.0) - p * c.powf(p - 1.0) * u * t * s;
    if !(coef < 0.0) {
        return Err(Error::NonNegativeStartCoefficient(coef));
    }
    Ok(coef)
}

enum NodeFail {
    NotSpacelike,
    Inadmissible,
    Domain,
}

/// The discrete operator `Φ(u) = F[A(u)] − ψ_t(ξ, u, τ(u))` on a grid.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteProblem<'a> {
    grid: &'a SphereGrid,
    psi: HomotopyPrescription<'a>,
    k: usize,
}

impl<'a> DiscreteProblem<'a> {
    pub fn new(grid: &'a SphereGrid, psi: HomotopyPrescription<'a>, k: usize) -> Result<Self> {
        if k == 0 || k > grid.dim() {
            return Err(Error::OrderOutOfRange { k, n: grid.dim() });
        }
        Ok(DiscreteProblem { grid, psi, k })
    }

    pub fn grid(&self) -> &'a SphereGrid {
        self.grid
    }

    pub fn psi(&self) -> &HomotopyPrescription<'a> {
        &self.psi
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn at(&self, t: f64) -> Result<Self> {
        Ok(DiscreteProblem { psi: self.psi.at(t)?, ..*self })
    }

    fn check_len(&self, u: &ScalarField) -> Result<()> {
        if u.len() != self.grid.len() {
            return Err(Error::FieldLength { expected: self.grid.len(), got: u.len() });
        }
        Ok(())
    }

    fn local<T: Real>(&self, node: usize, r: T, p: [T; 2], z: [[T; 2]; 2]) -> std::result::Result<T, NodeFail> {
        let grid = self.grid;
        let n = grid.dim();
        let gam = grid.christoffel(node);
        let mut hess = z;
        for i in 0..n {
            for j in 0..n {
                for (l, pl) in p.iter().enumerate().take(n) {
                    hess[i][j] = hess[i][j] - pl.scale(gam[l][i][j]);
                }
            }
        }
        let geo = local_geometry(n, grid.sigma(node), grid.sigma_inv(node), r, p, hess).ok_or(NodeFail::NotSpacelike)?;
        let s = matrix_sigmas(&geo.shape(n), n);
        if !s[1..=self.k].iter().all(|v| v.val() > 0.0) {
            return Err(NodeFail::Inadmissible);
        }
        let h = s[self.k].scale(1.0 / binomial(n, self.k));
        let f = if self.k == 1 { h } else { h.powf(1.0 / self.k as f64) };
        let ev = self.psi.eval(&grid.point(node), r.val(), geo.tau.val()).map_err(|_| NodeFail::Domain)?;
        Ok(f - T::lift2(r, geo.tau, ev.value, ev.d_r, ev.d_tau))
    }

    fn local_vars(&self, u: &[f64], node: usize) -> (f64, [f64; 2], Mat2) {
        let grid = self.grid;
        let n = grid.dim();
        let mut p = [0.0; 2];
        let mut z = [[0.0; 2]; 2];
        for (i, pi) in p.iter_mut().enumerate().take(n) {
            *pi = grid.apply_op(u, node, i, 1.0);
        }
        for i in 0..n {
            for j in i..n {
                let v = grid.apply_op(u, node, second_op(n, i, j), 1.0);
                z[i][j] = v;
                z[j][i] = v;
            }
        }
        (u[node], p, z)
    }

    /// Node-wise residual. Non-spacelike, inadmissible or out-of-domain nodes
    /// are reported with their indices.
    pub fn residual(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check_len(u)?;
        let vals = map_indexed(self.grid.execution(), self.grid.len(), |node| {
            let (r, p, z) = self.local_vars(u.values(), node);
            self.local(node, r, p, z)
        });
        let pick = |want: fn(&NodeFail) -> bool| -> Vec<usize> {
            vals.iter().enumerate().filter(|(_, v)| matches!(v, Err(e) if want(e))).map(|(i, _)| i).collect()
        };
        let spacelike = pick(|e| matches!(e, NodeFail::NotSpacelike));
        if !spacelike.is_empty() {
            return Err(Error::NotSpacelike { nodes: spacelike });
        }
        let domain = pick(|e| matches!(e, NodeFail::Domain));
        if !domain.is_empty() {
            return Err(Error::Domain(format!("prescription undefined (u <= 0) at {} node(s)", domain.len())));
        }
        let inadmissible = pick(|e| matches!(e, NodeFail::Inadmissible));
        if !inadmissible.is_empty() {
            return Err(Error::InadmissibleGraph { k: self.k, nodes: inadmissible });
        }
        Ok(ScalarField::new(vals.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()))
    }

    fn row<const N: usize>(&self, u: &[f64], node: usize) -> std::result::Result<(Vec<(usize, f64)>, Mat2), NodeFail> {
        let grid = self.grid;
        let n = grid.dim();
        let (r0, p0, z0) = self.local_vars(u, node);
        let r = Dual::<N>::var(r0, 0);
        let mut p = [Dual::<N>::cst(0.0); 2];
        let mut z = [[Dual::<N>::cst(0.0); 2]; 2];
        for i in 0..n {
            p[i] = Dual::var(p0[i], 1 + i);
            for j in i..n {
                let v = Dual::var(z0[i][j], 1 + second_op(n, i, j));
                z[i][j] = v;
                z[j][i] = v;
            }
        }
        let d = self.local(node, r, p, z)?.d;
        let mut entries = vec![(node, d[0])];
        for op in 0..N - 1 {
            for tap in grid.taps(node, op) {
                entries.push((tap.node, d[op + 1] * tap.weight));
            }
        }
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        let mut principal = [[0.0; 2]; 2];
        for i in 0..n {
            for j in 0..n {
                let w = d[1 + second_op(n, i, j)];
                principal[i][j] = if i == j { w } else { 0.5 * w };
            }
        }
        Ok((merged, principal))
    }

    /// Exact Jacobian `∂Φ/∂u` of the discrete residual, with an ellipticity
    /// check of its second-order block at every node.
    pub fn jacobian(&self, u: &ScalarField) -> Result<LinearizedOperator> {
        self.residual(u)?;
        let n = self.grid.dim();
        let rows = map_indexed(self.grid.execution(), self.grid.len(), |node| match n {
            1 => self.row::<3>(u.values(), node),
            _ => self.row::<6>(u.values(), node),
        });
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut principal = Vec::with_capacity(rows.len());
        for (node, row) in rows.into_iter().enumerate() {
            let (entries, block) = row.map_err(|_| Error::InadmissibleGraph { k: self.k, nodes: vec![node] })?;
            if !positive_definite(n, &block) {
                return Err(Error::NonElliptic { node });
            }
            for (c, v) in entries {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
            principal.push(block);
        }
        Ok(LinearizedOperator { dim: n, row_ptr, cols, vals, principal })
    }

    /// Relative error of the central-difference directional derivative of the
    /// residual against `J v`.
    pub fn directional_check(&self, u: &ScalarField, v: &ScalarField, eps: f64) -> Result<f64> {
        self.check_len(v)?;
        let jv = self.jacobian(u)?.apply(v.values());
        let shifted = |s: f64| {
            ScalarField::new(u.values().iter().zip(v.values()).map(|(a, b)| a + s * eps * b).collect())
        };
        let plus = self.residual(&shifted(1.0))?;
        let minus = self.residual(&shifted(-1.0))?;
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..jv.len() {
            let fd = (plus.values()[i] - minus.values()[i]) / (2.0 * eps);
            err = err.max((fd - jv[i]).abs());
            scale = scale.max(jv[i].abs());
        }
        Ok(err / scale.max(f64::MIN_POSITIVE))
    }
}

fn positive_definite(n: usize, m: &Mat2) -> bool {
    match n {
        1 => m[0][0] > 0.0,
        _ => m[0][0] > 0.0 && m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0,
    }
}

/// Smooth non-constant direction used by the Jacobian self-check.
pub fn smooth_direction(grid: &SphereGrid) -> ScalarField {
    ScalarField::from_fn(grid, |p| match *p {
        SpherePoint::Circle { theta } => theta.cos() + 0.5 * (2.0 * theta).sin(),
        SpherePoint::Sphere { .. } => {
            let [x, y, z] = p.embedding();
            x + 0.5 * y * z + 0.3 * z
        }
    })
}

/// Sparse discrete Jacobian in compressed-row form.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Symmetric coefficient block of the second partials at each node.
    principal: Vec<Mat2>,
}

impl LinearizedOperator {
    pub fn len(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices (ascending) and values of one row.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|p| v[p]).unwrap_or(0.0)
    }

    pub fn principal(&self, node: usize) -> Mat2 {
        self.principal[node]
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let (c, w) = self.row(i);
                c.iter().zip(w).map(|(&j, a)| a * v[j]).sum()
            })
            .collect()
    }

    /// `(kl, ku)`: the largest sub- and super-diagonal offsets present.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.len() {
            for &j in self.row(i).0 {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn factor(&self) -> Result<BandLu> {
        let (kl, ku) = self.bandwidths();
        let mut m = BandMatrix::zeros(self.len(), kl, ku);
        for i in 0..self.len() {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                m.add(i, j, a);
            }
        }
        m.factor()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NewtonStop {
    MaxIterations,
    LineSearchStalled,
    SingularJacobian,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual_norm: f64,
    /// Residual sup-norm before each iteration and at the end.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonFailure {
    pub reason: NewtonStop,
    pub best: ScalarField,
    pub best_residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContinuationStop {
    StepTooSmall,
    MonitorViolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationFailure {
    pub reason: ContinuationStop,
    /// Last accepted parameter value.
    pub t: f64,
    pub dt: f64,
    pub last_u: ScalarField,
    pub monitor: Option<BoundReport>,
    pub barriers: Barriers,
    pub trace: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Setup(#[from] Error),
    #[error("Newton iteration failed ({:?}) after {} iterations, best residual {:.3e}", .0.reason, .0.iterations, .0.best_residual)]
    Newton(Box<NewtonFailure>),
    #[error(transparent)]
    Barrier(#[from] BarrierScanFailure),
    #[error("continuation stopped ({:?}) at t = {}", .0.reason, .0.t)]
    Continuation(Box<ContinuationFailure>),
    #[error("Jacobian self-check failed at t = {t}: relative error {relative_error:.3e}")]
    JacobianCheck { t: f64, relative_error: f64 },
}

fn sup(v: &ScalarField) -> f64 {
    v.values().iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// Damped Newton: each step must keep the iterate spacelike and admissible
/// and decrease the residual sup-norm.
pub fn newton_solve(
    problem: &DiscreteProblem<'_>,
    u0: &ScalarField,
    config: &SolverConfig,
) -> std::result::Result<(ScalarField, NewtonReport), SolveError> {
    let d = config.damping;
    let mut u = u0.clone();
    let mut res = problem.residual(&u)?;
    let mut norm = sup(&res);
    let mut history = vec![norm];
    let fail = |reason, u: ScalarField, norm, iters, history| {
        SolveError::Newton(Box::new(NewtonFailure { reason, best: u, best_residual: norm, iterations: iters, history }))
    };
    for iter in 0..config.max_newton {
        if norm <= config.tol_newton {
            return Ok((u, NewtonReport { iterations: iter, residual_norm: norm, history }));
        }
        let lu = match problem.jacobian(&u).and_then(|j| j.factor()) {
            Ok(lu) => lu,
            Err(Error::Singular(_)) => return Err(fail(NewtonStop::SingularJacobian, u, norm, iter, history)),
            Err(e) => return Err(e.into()),
        };
        let rhs: Vec<f64> = res.values().iter().map(|x| -x).collect();
        let delta = lu.solve(&rhs);
        let mut alpha = 1.0;
        loop {
            let trial = ScalarField::new(u.values().iter().zip(&delta).map(|(a, b)| a + alpha * b).collect());
            if let Ok(r) = problem.residual(&trial) {
                let n = sup(&r);
                if n < (1.0 - d.sufficient_decrease * alpha) * norm {
                    u = trial;
                    res = r;
                    norm = n;
                    break;
                }
            }
            alpha *= d.shrink;
            if alpha < d.min_step {
                return Err(fail(NewtonStop::LineSearchStalled, u, norm, iter + 1, history));
            }
        }
        history.push(norm);
    }
    if norm <= config.tol_newton {
        return Ok((u, NewtonReport { iterations: config.max_newton, residual_norm: norm, history }));
    }
    Err(fail(NewtonStop::MaxIterations, u, norm, config.max_newton, history))
}

/// One accepted continuation state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub iters: usize,
    pub residual: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub max_tau: f64,
    pub max_curvature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyState {
    pub u: ScalarField,
    pub t: f64,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub monitor: BoundReport,
    pub barriers: Barriers,
    pub step_history: Vec<StepRecord>,
    pub rejected_steps: usize,
    /// `(t, relative error)` of each Jacobian self-check.
    pub jacobian_checks: Vec<(f64, f64)>,
    pub lambda: f64,
    pub start_coefficient: f64,
}

/// Barriers of the target enclosed with those of the reference prescription.
pub fn homotopy_barriers(
    target: &dyn Prescription,
    p: f64,
    grid: &SphereGrid,
    scan: ScanSettings,
) -> std::result::Result<Barriers, BarrierScanFailure> {
    let exec = grid.execution();
    let b = scan_barriers_with(target, scan, grid.points(), exec)?;
    let r = scan_barriers_with(&ReferencePrescription { power: p }, scan, grid.points(), exec)?;
    Ok(b.enclosing(r))
}

/// Follows `ψ_t` from the umbilic start at `t = 0` to `config.t_final`.
pub fn run_homotopy(
    target: &dyn Prescription,
    grid: &SphereGrid,
    config: &SolverConfig,
) -> std::result::Result<HomotopyState, SolveError> {
    config.validate()?;
    let lambda = initial_constant(config.p)?;
    let start_coefficient = zeroth_coefficient_at_start(config.p)?;
    let barriers = homotopy_barriers(target, config.p, grid, config.scan)?;
    let base = DiscreteProblem::new(grid, HomotopyPrescription::new(target, config.p, 0.0)?, config.k)?;

    let mut trace = Vec::new();
    let mut checks = Vec::new();
    let mut accepted = 0usize;
    let record = |u: &ScalarField, t: f64, iters: usize, residual: f64, trace: &mut Vec<StepRecord>| {
        let geo = InducedGeometry::compute(u, grid)?;
        let report = check_bounds(&geo, u, barriers, config.c_tau, config.c_a, config.k)?;
        trace.push(StepRecord {
            t,
            iters,
            residual,
            min_u: report.min_u,
            max_u: report.max_u,
            max_tau: report.max_tau,
            max_curvature: report.max_curvature,
        });
        Ok::<_, SolveError>(report)
    };
    let mut self_check = |problem: &DiscreteProblem<'_>, u: &ScalarField, accepted: usize| {
        if config.jacobian_check_every == 0 || accepted % config.jacobian_check_every != 0 {
            return Ok(());
        }
        let rel = problem.directional_check(u, &smooth_direction(grid), 1e-5)?;
        checks.push((problem.psi().t(), rel));
        if !(rel <= config.jacobian_check_tol) {
            return Err(SolveError::JacobianCheck { t: problem.psi().t(), relative_error: rel });
        }
        Ok(())
    };

    let (mut u, rep) = newton_solve(&base, &ScalarField::constant(grid, lambda), config)?;
    let mut t = 0.0;
    let mut last = rep;
    let mut monitor = record(&u, t, last.iterations, last.residual_norm, &mut trace)?;
    let fail = |reason, t, dt, u: &ScalarField, monitor, trace: &Vec<StepRecord>| {
        SolveError::Continuation(Box::new(ContinuationFailure {
            reason,
            t,
            dt,
            last_u: u.clone(),
            monitor,
            barriers,
            trace: trace.clone(),
        }))
    };
    if !monitor.all_ok() {
        return Err(fail(ContinuationStop::MonitorViolation, t, 0.0, &u, Some(monitor), &trace));
    }
    self_check(&base, &u, accepted)?;

    let mut dt = config.dt_init;
    let mut rejected = 0;
    while t < config.t_final {
        let t_next = if t + dt >= config.t_final { config.t_final } else { t + dt };
        let problem = base.at(t_next)?;
        match newton_solve(&problem, &u, config) {
            Ok((next, rep)) => {
                let report = record(&next, t_next, rep.iterations, rep.residual_norm, &mut trace)?;
                if !report.all_ok() {
                    return Err(fail(ContinuationStop::MonitorViolation, t, dt, &next, Some(report), &trace));
                }
                u = next;
                t = t_next;
                monitor = report;
                accepted += 1;
                self_check(&problem, &u, accepted)?;
                if rep.iterations <= config.fast_iters {
                    dt = (dt * config.dt_growth).min(config.dt_max);
                }
                last = rep;
            }
            Err(SolveError::Newton(_)) => {
                rejected += 1;
                dt *= 0.5;
                if dt < config.dt_min {
                    return Err(fail(ContinuationStop::StepTooSmall, t, dt, &u, Some(monitor), &trace));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(HomotopyState {
        u,
        t,
        residual_norm: last.residual_norm,
        newton_iters: last.iterations,
        monitor,
        barriers,
        step_history: trace,
        rejected_steps: rejected,
        jacobian_checks: checks,
        lambda,
        start_coefficient,
    })
}
