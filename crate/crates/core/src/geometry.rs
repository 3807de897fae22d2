//! Induced geometry of the graph `ξ ↦ Y(u(ξ), ξ) = sinh(u) E₁ + cosh(u) ξ`
//! in de Sitter space: metric, tilt, height, second fundamental form and
//! principal curvatures.
//!
//! The unit normal is never formed; the tilt is taken from its positive
//! closed form `τ = cosh²u / √(cosh²u − |∇̃u|²)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{covariant_hessian_at, CotensorField, Mat2, ScalarField, SphereGrid, Vec2};
use crate::par::{map_indexed, try_map_indexed};
use crate::real::Real;
use crate::symmetric::EigenTuple;

/// Relative spacelike guard: a node is rejected when
/// `cosh²u − |∇̃u|² ≤ SPACELIKE_GUARD · cosh²u`.
pub const SPACELIKE_GUARD: f64 = 1e-8;

/// Node-local geometry from `(u, ∂u, ∇̃²u)`, generic so that the solver can
/// push dual numbers through the same formulas.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalGeometry<T> {
    pub tau: T,
    pub g: [[T; 2]; 2],
    pub g_inv: [[T; 2]; 2],
    pub a: [[T; 2]; 2],
}

impl<T: Real> LocalGeometry<T> {
    /// Shape operator `A^i_j = g^{ik} A_kj`.
    pub fn shape(&self, n: usize) -> [[T; 2]; 2] {
        let mut m = [[T::cst(0.0); 2]; 2];
        for i in 0..n {
            for j in 0..n {
                let mut s = T::cst(0.0);
                for k in 0..n {
                    s = s + self.g_inv[i][k] * self.a[k][j];
                }
                m[i][j] = s;
            }
        }
        m
    }
}

/// Returns `None` when the node fails the spacelike guard.
pub(crate) fn local_geometry<T: Real>(
    n: usize,
    sigma: &Mat2,
    sigma_inv: &Mat2,
    r: T,
    p: [T; 2],
    hess: [[T; 2]; 2],
) -> Option<LocalGeometry<T>> {
    let zero = T::cst(0.0);
    let mut up = [zero; 2];
    let mut grad2 = zero;
    for i in 0..n {
        for l in 0..n {
            up[i] = up[i] + p[l].scale(sigma_inv[i][l]);
        }
        grad2 = grad2 + up[i] * p[i];
    }
    let (c, s, th) = (r.cosh(), r.sinh(), r.tanh());
    let c2 = c * c;
    let gap = c2 - grad2;
    if !(gap.val() > SPACELIKE_GUARD * c2.val()) {
        return None;
    }
    let tau = c2 / gap.sqrt();
    let c4 = c2 * c2;
    let mut g = [[zero; 2]; 2];
    let mut g_inv = [[zero; 2]; 2];
    let mut a = [[zero; 2]; 2];
    let pref = tau / c;
    for i in 0..n {
        for j in 0..n {
            g[i][j] = c2.scale(sigma[i][j]) - p[i] * p[j];
            g_inv[i][j] = (T::cst(sigma_inv[i][j]) + tau * tau * up[i] * up[j] / c4) / c2;
            let sc = s * c;
            a[i][j] = pref * (hess[i][j] - (th * p[i] * p[j]).scale(2.0) + sc.scale(sigma[i][j]));
        }
    }
    Some(LocalGeometry { tau, g, g_inv, a })
}

/// Metric data of a graph: `g`, its closed-form inverse, and the spacelike verdict.
#[derive(Debug, Clone)]
pub struct MetricField {
    pub g: Vec<Mat2>,
    /// NaN at non-spacelike nodes.
    pub g_inv: Vec<Mat2>,
    pub spacelike: bool,
    /// Nodes failing the spacelike guard.
    pub violations: Vec<usize>,
    /// `max ‖g·g⁻¹ − I‖` over spacelike nodes.
    pub inverse_error: f64,
}

/// Per-node bundle derived from a graph function.
#[derive(Debug, Clone)]
pub struct InducedGeometry {
    pub dim: usize,
    /// Coordinate partials `u_i`.
    pub grad: Vec<Vec2>,
    /// `∇̃²u`.
    pub hess: Vec<Mat2>,
    pub g: Vec<Mat2>,
    pub g_inv: Vec<Mat2>,
    pub tau: Vec<f64>,
    pub eta: Vec<f64>,
    pub a: CotensorField,
    /// Ascending principal curvatures.
    pub shape_eigs: Vec<EigenTuple>,
}

fn check_len(u: &ScalarField, grid: &SphereGrid) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::FieldLength { expected: grid.len(), got: u.len() });
    }
    Ok(())
}

fn derivatives(u: &ScalarField, grid: &SphereGrid) -> (Vec<Vec2>, Vec<Mat2>) {
    let n = grid.dim();
    let d1 = grid.partials(u.values(), 1.0);
    let d2 = grid.second_partials(u.values(), 1.0);
    let hess = map_indexed(grid.execution(), grid.len(), |node| {
        covariant_hessian_at(n, &d2[node], &d1[node], grid.christoffel(node))
    });
    (d1, hess)
}

fn node_geometry(grid: &SphereGrid, node: usize, u: f64, p: &Vec2, h: &Mat2) -> Option<LocalGeometry<f64>> {
    local_geometry(grid.dim(), grid.sigma(node), grid.sigma_inv(node), u, *p, *h)
}

fn inverse_error(n: usize, g: &Mat2, gi: &Mat2) -> f64 {
    let mut e: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s: f64 = (0..n).map(|k| g[i][k] * gi[k][j]).sum();
            e = e.max((s - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    e
}

/// `g_ij = −u_i u_j + cosh²(u) σ_ij` and its closed-form inverse.
pub fn induced_metric(u: &ScalarField, grid: &SphereGrid) -> Result<MetricField> {
    check_len(u, grid)?;
    let n = grid.dim();
    let p = grid.partials(u.values(), 1.0);
    let per_node = map_indexed(grid.execution(), grid.len(), |node| {
        let c2 = u.values()[node].cosh().powi(2);
        let mut g = [[0.0; 2]; 2];
        for i in 0..n {
            for j in 0..n {
                g[i][j] = c2 * grid.sigma(node)[i][j] - p[node][i] * p[node][j];
            }
        }
        match node_geometry(grid, node, u.values()[node], &p[node], &[[0.0; 2]; 2]) {
            Some(l) => (g, l.g_inv, true),
            None => (g, [[f64::NAN; 2]; 2], false),
        }
    });
    let violations: Vec<usize> = per_node.iter().enumerate().filter(|(_, x)| !x.2).map(|(i, _)| i).collect();
    let inverse_error = per_node
        .iter()
        .filter(|x| x.2)
        .map(|(g, gi, _)| inverse_error(n, g, gi))
        .fold(0.0, f64::max);
    Ok(MetricField {
        g: per_node.iter().map(|x| x.0).collect(),
        g_inv: per_node.iter().map(|x| x.1).collect(),
        spacelike: violations.is_empty(),
        violations,
        inverse_error,
    })
}

/// Tilt `τ` and height `η = sinh(u)`.
pub fn tilt_and_height(u: &ScalarField, grid: &SphereGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    let geom = InducedGeometry::compute(u, grid)?;
    Ok((geom.tau, geom.eta))
}

/// `A_ij = cosh⁻¹(u) τ (∇̃²_ij u − 2 tanh(u) u_i u_j + sinh(u) cosh(u) σ_ij)`.
pub fn second_fundamental_form(u: &ScalarField, grid: &SphereGrid) -> Result<CotensorField> {
    Ok(InducedGeometry::compute(u, grid)?.a)
}

/// Eigenvalues of `A w = λ g w` via `g = L Lᵀ` and the symmetric `L⁻¹ A L⁻ᵀ`.
pub fn shape_eigenvalues(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<EigenTuple> {
    let n = g.nrows();
    if n == 0 || g.ncols() != n || a.shape() != (n, n) {
        return Err(Error::Domain("shape_eigenvalues needs square matrices of equal size".into()));
    }
    let chol = g.clone().cholesky().ok_or(Error::NotSpacelike { nodes: vec![] })?;
    let l = chol.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::NotSpacelike { nodes: vec![] })?;
    let sym = &linv * a * linv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut eigs: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(|x, y| x.total_cmp(y));
    EigenTuple::new(eigs)
}

/// Closed-form version of [`shape_eigenvalues`] for `n ≤ 2`.
pub(crate) fn shape_eigs_small(n: usize, a: &Mat2, g: &Mat2) -> Option<Vec<f64>> {
    if n == 1 {
        return (g[0][0] > 0.0).then(|| vec![a[0][0] / g[0][0]]);
    }
    if !(g[0][0] > 0.0) {
        return None;
    }
    let l00 = g[0][0].sqrt();
    let l10 = g[1][0] / l00;
    let d = g[1][1] - l10 * l10;
    if !(d > 0.0) {
        return None;
    }
    let l11 = d.sqrt();
    // L⁻¹ = [[1/l00, 0], [-l10/(l00 l11), 1/l11]]
    let m = [[1.0 / l00, 0.0], [-l10 / (l00 * l11), 1.0 / l11]];
    let mut s = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut v = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    v += m[i][k] * a[k][l] * m[j][l];
                }
            }
            s[i][j] = v;
        }
    }
    let off = 0.5 * (s[0][1] + s[1][0]);
    let mean = 0.5 * (s[0][0] + s[1][1]);
    let rad = (0.25 * (s[0][0] - s[1][1]).powi(2) + off * off).sqrt();
    Some(vec![mean - rad, mean + rad])
}

impl InducedGeometry {
    /// Full geometry of a spacelike graph; errors with the offending nodes otherwise.
    pub fn compute(u: &ScalarField, grid: &SphereGrid) -> Result<Self> {
        check_len(u, grid)?;
        let n = grid.dim();
        let (grad, hess) = derivatives(u, grid);
        let locals = map_indexed(grid.execution(), grid.len(), |node| {
            node_geometry(grid, node, u.values()[node], &grad[node], &hess[node])
        });
        let bad: Vec<usize> = locals.iter().enumerate().filter(|(_, l)| l.is_none()).map(|(i, _)| i).collect();
        if !bad.is_empty() {
            return Err(Error::NotSpacelike { nodes: bad });
        }
        let locals: Vec<LocalGeometry<f64>> = locals.into_iter().flatten().collect();
        let shape_eigs = try_map_indexed(grid.execution(), grid.len(), |node| {
            let l = &locals[node];
            shape_eigs_small(n, &l.a, &l.g)
                .ok_or(Error::NotSpacelike { nodes: vec![node] })
                .and_then(EigenTuple::new)
        })?;
        Ok(InducedGeometry {
            dim: n,
            grad,
            hess,
            g: locals.iter().map(|l| l.g).collect(),
            g_inv: locals.iter().map(|l| l.g_inv).collect(),
            tau: locals.iter().map(|l| l.tau).collect(),
            eta: u.values().iter().map(|x| x.sinh()).collect(),
            a: CotensorField { dim: n, values: locals.iter().map(|l| l.a).collect() },
            shape_eigs,
        })
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Shape operator `A^i_j` at a node.
    pub fn shape(&self, node: usize) -> Mat2 {
        let n = self.dim;
        let mut m = [[0.0; 2]; 2];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = (0..n).map(|k| self.g_inv[node][i][k] * self.a.values[node][k][j]).sum();
            }
        }
        m
    }

    /// `|A| = √(Σ λ_i²)`, the Frobenius norm of the symmetrized shape matrix.
    pub fn curvature_norm(&self, node: usize) -> f64 {
        self.shape_eigs[node].norm()
    }
}
