//! Runtime a priori bound checks and discretization validators.
//!
//! The identity residuals use the Levi-Civita connection of the induced
//! metric `g`, with Christoffel symbols obtained by differencing the nodal
//! components of `g`. Residuals are sup-norms of coordinate components. On S²
//! the rings next to the poles converge slowly for non-zonal fields.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::InducedGeometry;
use crate::grid::{Mat2, ScalarField, SphereGrid, SpherePoint, Vec2};
use crate::par::map_indexed;
use crate::prescription::Barriers;
use crate::symmetric::{self, in_gamma_k, normalized_root};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub c0_ok: bool,
    pub min_u: f64,
    pub max_u: f64,
    pub r1: f64,
    pub r2: f64,
    pub c0_violations: Vec<usize>,

    pub tilt_ok: bool,
    pub max_tau: f64,
    pub c_tau: f64,
    pub tilt_violations: Vec<usize>,

    pub curv_ok: bool,
    pub max_curvature: f64,
    pub c_a: f64,
    /// `min_j S_j` over all nodes.
    pub min_cone_margin: f64,
    pub curv_violations: Vec<usize>,
}

impl BoundReport {
    pub fn all_ok(&self) -> bool {
        self.c0_ok && self.tilt_ok && self.curv_ok
    }
}

/// Checks `R1 ≤ u ≤ R2`, `τ ≤ C_τ`, `λ ∈ Γ_k` and `|A| ≤ C_A` at every node.
pub fn check_bounds(
    geom: &InducedGeometry,
    u: &ScalarField,
    barriers: Barriers,
    c_tau: f64,
    c_a: f64,
    k: usize,
) -> Result<BoundReport> {
    if u.len() != geom.len() {
        return Err(Error::FieldLength { expected: geom.len(), got: u.len() });
    }
    let mut c0_violations = Vec::new();
    let mut tilt_violations = Vec::new();
    let mut curv_violations = Vec::new();
    let mut max_tau = f64::NEG_INFINITY;
    let mut max_curvature: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for node in 0..geom.len() {
        let un = u.values()[node];
        if !barriers.contains(un) {
            c0_violations.push(node);
        }
        let tau = geom.tau[node];
        max_tau = max_tau.max(tau);
        if !(tau <= c_tau) {
            tilt_violations.push(node);
        }
        let cone = in_gamma_k(&geom.shape_eigs[node], k)?;
        let norm = geom.curvature_norm(node);
        max_curvature = max_curvature.max(norm);
        min_margin = min_margin.min(cone.margin());
        if !cone.member || !(norm <= c_a) {
            curv_violations.push(node);
        }
    }
    Ok(BoundReport {
        c0_ok: c0_violations.is_empty(),
        min_u: u.min(),
        max_u: u.max(),
        r1: barriers.r1,
        r2: barriers.r2,
        c0_violations,
        tilt_ok: tilt_violations.is_empty(),
        max_tau,
        c_tau,
        tilt_violations,
        curv_ok: curv_violations.is_empty(),
        max_curvature,
        c_a,
        min_cone_margin: min_margin,
        curv_violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `∇²η − (τA − ηg)`.
    pub r_eta: f64,
    /// `∇_j τ − A^i_j ∇_i η`.
    pub r_tau1: f64,
    /// `∇²τ − (∇_k A_ij ∇^k η + τ A²_ij − η A_ij)`.
    pub r_tau2: f64,
    /// `∇_k A_ij − ∇_i A_kj`.
    pub codazzi: f64,
    /// `∇²η − (τA + ηg)`: the opposite-sign variant, nonzero on umbilic slices.
    pub r_eta_plus: f64,
    /// `∇²τ − (∇A·∇η + τA² + ηA)`: opposite-sign variant of `r_tau2`.
    pub r_tau2_plus: f64,
    pub spacing: f64,
}

/// Pole-reflection factor of a coordinate component with the given indices
/// (only index 0 on S², the colatitude, flips).
fn parity(dim: usize, indices: &[usize]) -> f64 {
    if dim == 1 {
        return 1.0;
    }
    if indices.iter().filter(|&&i| i == 0).count() % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// `∂_k T_ij` for a per-node 2-tensor field.
fn tensor_partials(grid: &SphereGrid, field: &[Mat2]) -> Vec<[Mat2; 2]> {
    let n = grid.dim();
    let mut out = vec![[[[0.0; 2]; 2]; 2]; field.len()];
    for i in 0..n {
        for j in i..n {
            let comp: Vec<f64> = field.iter().map(|m| m[i][j]).collect();
            let d = grid.partials(&comp, parity(n, &[i, j]));
            for (node, dk) in d.iter().enumerate() {
                for k in 0..n {
                    out[node][k][i][j] = dk[k];
                    out[node][k][j][i] = dk[k];
                }
            }
        }
    }
    out
}

/// Christoffel symbols `Γ^k_ij` (`[k][i][j]`) of `g` from `∂_l g_ij` (`[l][i][j]`).
fn christoffel(n: usize, g_inv: &Mat2, dg: &[Mat2; 2]) -> [Mat2; 2] {
    let mut gam = [[[0.0; 2]; 2]; 2];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                gam[k][i][j] = 0.5
                    * (0..n)
                        .map(|l| g_inv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]))
                        .sum::<f64>();
            }
        }
    }
    gam
}

fn hessian(n: usize, d2: &Mat2, d1: &Vec2, gam: &[Mat2; 2]) -> Mat2 {
    let mut h = [[0.0; 2]; 2];
    for i in 0..n {
        for j in 0..n {
            h[i][j] = d2[i][j] - (0..n).map(|k| gam[k][i][j] * d1[k]).sum::<f64>();
        }
    }
    h
}

/// Residuals of the height/tilt identities and of Codazzi symmetry, in the
/// discrete induced connection.
pub fn identity_residuals(u: &ScalarField, grid: &SphereGrid) -> Result<IdentityResiduals> {
    identity_residuals_on(u, grid, |_| true)
}

/// As [`identity_residuals`], with sup-norms taken only over nodes whose point
/// satisfies `region`. Derivatives still use the full grid.
pub fn identity_residuals_on<F>(u: &ScalarField, grid: &SphereGrid, region: F) -> Result<IdentityResiduals>
where
    F: Fn(&SpherePoint) -> bool + Sync,
{
    let geo = InducedGeometry::compute(u, grid)?;
    let n = grid.dim();
    let dg = tensor_partials(grid, &geo.g);
    let da = tensor_partials(grid, &geo.a.values);
    let d_eta = grid.partials(&geo.eta, 1.0);
    let d2_eta = grid.second_partials(&geo.eta, 1.0);
    let d_tau = grid.partials(&geo.tau, 1.0);
    let d2_tau = grid.second_partials(&geo.tau, 1.0);

    let per_node = map_indexed(grid.execution(), grid.len(), |node| {
        if !region(&grid.point(node)) {
            return [0.0; 6];
        }
        let g = &geo.g[node];
        let gi = &geo.g_inv[node];
        let a = &geo.a.values[node];
        let (tau, eta) = (geo.tau[node], geo.eta[node]);
        let gam = christoffel(n, gi, &dg[node]);
        let h_eta = hessian(n, &d2_eta[node], &d_eta[node], &gam);
        let h_tau = hessian(n, &d2_tau[node], &d_tau[node], &gam);
        let shape = geo.shape(node);

        // ∇_k A_ij as [k][i][j]
        let mut na = [[[0.0; 2]; 2]; 2];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let corr: f64 = (0..n).map(|l| gam[l][k][i] * a[l][j] + gam[l][k][j] * a[i][l]).sum();
                    na[k][i][j] = da[node][k][i][j] - corr;
                }
            }
        }
        // ∇^k η
        let mut up_eta = [0.0; 2];
        for k in 0..n {
            up_eta[k] = (0..n).map(|l| gi[k][l] * d_eta[node][l]).sum();
        }

        let (mut r_eta, mut r_eta_plus, mut r_tau1, mut r_tau2, mut r_tau2_plus, mut codazzi) =
            (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
        for j in 0..n {
            let rhs: f64 = (0..n).map(|i| shape[i][j] * d_eta[node][i]).sum();
            r_tau1 = r_tau1.max((d_tau[node][j] - rhs).abs());
        }
        for i in 0..n {
            for j in 0..n {
                r_eta = r_eta.max((h_eta[i][j] - (tau * a[i][j] - eta * g[i][j])).abs());
                r_eta_plus = r_eta_plus.max((h_eta[i][j] - (tau * a[i][j] + eta * g[i][j])).abs());
                let grad_term: f64 = (0..n).map(|k| na[k][i][j] * up_eta[k]).sum();
                let a2: f64 = (0..n).map(|k| a[i][k] * shape[k][j]).sum();
                let base = grad_term + tau * a2;
                r_tau2 = r_tau2.max((h_tau[i][j] - (base - eta * a[i][j])).abs());
                r_tau2_plus = r_tau2_plus.max((h_tau[i][j] - (base + eta * a[i][j])).abs());
                for k in 0..n {
                    codazzi = codazzi.max((na[k][i][j] - na[i][k][j]).abs());
                }
            }
        }
        [r_eta, r_tau1, r_tau2, codazzi, r_eta_plus, r_tau2_plus]
    });
    let col = |c: usize| per_node.iter().map(|r| r[c]).fold(0.0, f64::max);
    Ok(IdentityResiduals {
        r_eta: col(0),
        r_tau1: col(1),
        r_tau2: col(2),
        codazzi: col(3),
        r_eta_plus: col(4),
        r_tau2_plus: col(5),
        spacing: grid.spacing(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaclaurinReport {
    /// `min over nodes of Σ f_i λ_i² − f²`.
    pub margin: f64,
    pub worst_node: usize,
    /// `max |f(λ) − ψ|` when nodal prescription values were supplied.
    pub max_equation_gap: Option<f64>,
}

/// Tolerance below which [`maclaurin_monitor`] margins count as violations.
pub const MACLAURIN_TOL: f64 = 1e-10;

pub fn maclaurin_monitor(geom: &InducedGeometry, k: usize, psi: Option<&[f64]>) -> Result<MaclaurinReport> {
    if let Some(p) = psi {
        if p.len() != geom.len() {
            return Err(Error::FieldLength { expected: geom.len(), got: p.len() });
        }
    }
    let mut margin = f64::INFINITY;
    let mut worst_node = 0;
    let mut gap: f64 = 0.0;
    for (node, lam) in geom.shape_eigs.iter().enumerate() {
        let f = normalized_root(lam, k)?;
        let grad = symmetric::grad_f(lam, k)?;
        let s: f64 = grad.values().iter().zip(lam.values()).map(|(fi, li)| fi * li * li).sum();
        let m = s - f * f;
        if m < margin {
            margin = m;
            worst_node = node;
        }
        if let Some(p) = psi {
            gap = gap.max((f - p[node]).abs());
        }
    }
    Ok(MaclaurinReport { margin, worst_node, max_equation_gap: psi.map(|_| gap) })
}
