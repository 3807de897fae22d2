//! Finite-difference discretization of the round circle and 2-sphere.
//!
//! S¹ is a periodic uniform grid in θ. S² is a colatitude/longitude grid
//! whose rings sit at half-cell offsets `φ_i = (i + ½)π/n_lat`, so no node
//! lies on a pole. Stencils that step past a pole are closed by reflection:
//! the ghost at `(−φ, θ)` is the node at `(φ, θ + π)`, which requires an even
//! number of longitudes. Component fields whose number of φ indices is odd
//! change sign under that reflection (the `parity` argument below).

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Resolution {
    Circle(usize),
    Sphere { nlat: usize, nlon: usize },
}

impl Resolution {
    pub fn dim(self) -> usize {
        match self {
            Resolution::Circle(_) => 1,
            Resolution::Sphere { .. } => 2,
        }
    }

    pub fn refined(self) -> Resolution {
        match self {
            Resolution::Circle(n) => Resolution::Circle(2 * n),
            Resolution::Sphere { nlat, nlon } => Resolution::Sphere { nlat: 2 * nlat, nlon: 2 * nlon },
        }
    }
}

/// A point of Sⁿ in intrinsic coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SpherePoint {
    Circle { theta: f64 },
    Sphere { colat: f64, lon: f64 },
}

impl SpherePoint {
    pub fn dim(&self) -> usize {
        match self {
            SpherePoint::Circle { .. } => 1,
            SpherePoint::Sphere { .. } => 2,
        }
    }

    /// Coordinates `(θ)` or `(φ, θ)`, zero-padded to two entries.
    pub fn coords(&self) -> Vec2 {
        match *self {
            SpherePoint::Circle { theta } => [theta, 0.0],
            SpherePoint::Sphere { colat, lon } => [colat, lon],
        }
    }

    /// Unit vector in ℝ³ (the circle sits in the `z = 0` plane).
    pub fn embedding(&self) -> [f64; 3] {
        match *self {
            SpherePoint::Circle { theta } => [theta.cos(), theta.sin(), 0.0],
            SpherePoint::Sphere { colat, lon } => {
                [colat.sin() * lon.cos(), colat.sin() * lon.sin(), colat.cos()]
            }
        }
    }
}

/// One weighted neighbour in a difference stencil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Tap {
    pub node: usize,
    pub weight: f64,
    /// The tap reaches its node through a pole reflection.
    pub flips: bool,
}

/// Flattened per-node stencils for every first and second partial.
/// Operator order: `∂_0 .. ∂_{n-1}`, then `∂_00, ∂_01, ∂_11` (n = 2) or `∂_00` (n = 1).
#[derive(Debug, Clone)]
struct Stencils {
    ops: usize,
    offsets: Vec<usize>,
    taps: Vec<Tap>,
}

impl Stencils {
    fn get(&self, node: usize, op: usize) -> &[Tap] {
        let s = node * self.ops + op;
        &self.taps[self.offsets[s]..self.offsets[s + 1]]
    }
}

/// Index of the second-partial operator for the unordered pair `(i, j)`.
pub(crate) fn second_op(dim: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    dim + if dim == 1 { 0 } else { a + b }
}

#[derive(Debug, Clone)]
pub struct SphereGrid {
    resolution: Resolution,
    points: Vec<SpherePoint>,
    sigma: Vec<Mat2>,
    sigma_inv: Vec<Mat2>,
    /// `Γ̃^k_ij` stored as `[k][i][j]`.
    christoffel: Vec<[Mat2; 2]>,
    spacing: f64,
    stencils: Stencils,
    exec: Execution,
}

impl SphereGrid {
    pub fn new(resolution: Resolution) -> Result<Self> {
        match resolution {
            Resolution::Circle(n) => {
                if n < 8 {
                    return Err(Error::UnsupportedGrid(format!("S^1 needs at least 8 nodes, got {n}")));
                }
                Ok(Self::circle(n))
            }
            Resolution::Sphere { nlat, nlon } => {
                if nlon < 8 || nlon % 2 != 0 {
                    return Err(Error::UnsupportedGrid(format!(
                        "S^2 needs an even longitude count >= 8, got {nlon}"
                    )));
                }
                if nlat < 4 {
                    return Err(Error::UnsupportedGrid(format!("S^2 needs at least 4 rings, got {nlat}")));
                }
                Ok(Self::sphere(nlat, nlon))
            }
        }
    }

    /// Builds a grid for `dim` with the given per-direction counts.
    pub fn build(dim: usize, counts: &[usize]) -> Result<Self> {
        let res = match (dim, counts) {
            (1, [n]) => Resolution::Circle(*n),
            (2, [nlat, nlon]) => Resolution::Sphere { nlat: *nlat, nlon: *nlon },
            _ => return Err(Error::UnsupportedGrid(format!("dim = {dim} with counts {counts:?}"))),
        };
        Self::new(res)
    }

    fn circle(n: usize) -> Self {
        let h = 2.0 * PI / n as f64;
        let points = (0..n).map(|j| SpherePoint::Circle { theta: j as f64 * h }).collect();
        let one = [[1.0, 0.0], [0.0, 0.0]];
        let wrap = |j: isize| (j.rem_euclid(n as isize)) as usize;
        let mut offsets = vec![0];
        let mut taps = Vec::with_capacity(5 * n);
        for j in 0..n as isize {
            let c = |jj: isize, w: f64| Tap { node: wrap(jj), weight: w, flips: false };
            taps.extend([c(j + 1, 0.5 / h), c(j - 1, -0.5 / h)]);
            offsets.push(taps.len());
            let h2 = h * h;
            taps.extend([c(j + 1, 1.0 / h2), c(j, -2.0 / h2), c(j - 1, 1.0 / h2)]);
            offsets.push(taps.len());
        }
        SphereGrid {
            resolution: Resolution::Circle(n),
            points,
            sigma: vec![one; n],
            sigma_inv: vec![one; n],
            christoffel: vec![[[[0.0; 2]; 2]; 2]; n],
            spacing: h,
            stencils: Stencils { ops: 2, offsets, taps },
            exec: Execution::default(),
        }
    }

    fn sphere(nlat: usize, nlon: usize) -> Self {
        let hp = PI / nlat as f64;
        let ht = 2.0 * PI / nlon as f64;
        let len = nlat * nlon;
        let mut points = Vec::with_capacity(len);
        let mut sigma = Vec::with_capacity(len);
        let mut sigma_inv = Vec::with_capacity(len);
        let mut christoffel = Vec::with_capacity(len);
        let mut max_sin: f64 = 0.0;
        for i in 0..nlat {
            let phi = (i as f64 + 0.5) * hp;
            let (s, c) = phi.sin_cos();
            max_sin = max_sin.max(s);
            for j in 0..nlon {
                points.push(SpherePoint::Sphere { colat: phi, lon: j as f64 * ht });
                sigma.push([[1.0, 0.0], [0.0, s * s]]);
                sigma_inv.push([[1.0, 0.0], [0.0, 1.0 / (s * s)]]);
                let mut g = [[[0.0; 2]; 2]; 2];
                g[0][1][1] = -s * c;
                g[1][0][1] = c / s;
                g[1][1][0] = c / s;
                christoffel.push(g);
            }
        }

        // (ring, lon) -> (node, flips), reflecting through a pole when needed.
        let at = |ii: isize, jj: isize| -> (usize, bool) {
            let (mut ii, mut jj, mut flips) = (ii, jj, false);
            if ii < 0 {
                ii = -1 - ii;
                jj += nlon as isize / 2;
                flips = true;
            } else if ii >= nlat as isize {
                ii = 2 * nlat as isize - 1 - ii;
                jj += nlon as isize / 2;
                flips = true;
            }
            (ii as usize * nlon + jj.rem_euclid(nlon as isize) as usize, flips)
        };

        let mut offsets = vec![0];
        let mut taps = Vec::with_capacity(20 * len);
        for i in 0..nlat as isize {
            for j in 0..nlon as isize {
                let mut push = |entries: &[(isize, isize, f64)]| {
                    for &(di, dj, w) in entries {
                        let (node, flips) = at(i + di, j + dj);
                        taps.push(Tap { node, weight: w, flips });
                    }
                    offsets.push(taps.len());
                };
                push(&[(1, 0, 0.5 / hp), (-1, 0, -0.5 / hp)]);
                push(&[(0, 1, 0.5 / ht), (0, -1, -0.5 / ht)]);
                let (p2, t2, pt) = (hp * hp, ht * ht, 4.0 * hp * ht);
                push(&[(1, 0, 1.0 / p2), (0, 0, -2.0 / p2), (-1, 0, 1.0 / p2)]);
                push(&[(1, 1, 1.0 / pt), (1, -1, -1.0 / pt), (-1, 1, -1.0 / pt), (-1, -1, 1.0 / pt)]);
                push(&[(0, 1, 1.0 / t2), (0, 0, -2.0 / t2), (0, -1, 1.0 / t2)]);
            }
        }

        SphereGrid {
            resolution: Resolution::Sphere { nlat, nlon },
            points,
            sigma,
            sigma_inv,
            christoffel,
            spacing: hp.max(ht * max_sin),
            stencils: Stencils { ops: 5, offsets, taps },
            exec: Execution::default(),
        }
    }

    /// Same grid with a different node-map execution policy.
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn dim(&self) -> usize {
        self.resolution.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest coordinate step measured in the round metric.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn point(&self, node: usize) -> SpherePoint {
        self.points[node]
    }

    pub fn sigma(&self, node: usize) -> &Mat2 {
        &self.sigma[node]
    }

    pub fn sigma_inv(&self, node: usize) -> &Mat2 {
        &self.sigma_inv[node]
    }

    /// `Γ̃^k_ij` as `[k][i][j]`.
    pub fn christoffel(&self, node: usize) -> &[Mat2; 2] {
        &self.christoffel[node]
    }

    /// Grid with every direction doubled.
    pub fn refine(&self) -> SphereGrid {
        SphereGrid::new(self.resolution.refined())
            .expect("refining a valid grid stays valid")
            .with_execution(self.exec)
    }

    pub(crate) fn taps(&self, node: usize, op: usize) -> &[Tap] {
        self.stencils.get(node, op)
    }

    #[cfg(test)]
    pub(crate) fn ops(&self) -> usize {
        self.stencils.ops
    }

    #[inline]
    pub(crate) fn apply_op(&self, values: &[f64], node: usize, op: usize, parity: f64) -> f64 {
        self.taps(node, op)
            .iter()
            .map(|t| t.weight * if t.flips { parity } else { 1.0 } * values[t.node])
            .sum()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::FieldLength { expected: self.len(), got });
        }
        Ok(())
    }

    /// Coordinate partials `∂_i f`. `parity` is the factor a component picks up
    /// under pole reflection (`1` for scalars).
    pub fn partials(&self, values: &[f64], parity: f64) -> Vec<Vec2> {
        let n = self.dim();
        map_indexed(self.exec, self.len(), |node| {
            let mut d = [0.0; 2];
            for (i, di) in d.iter_mut().enumerate().take(n) {
                *di = self.apply_op(values, node, i, parity);
            }
            d
        })
    }

    /// Coordinate second partials `∂_i ∂_j f` (symmetric by construction).
    pub fn second_partials(&self, values: &[f64], parity: f64) -> Vec<Mat2> {
        let n = self.dim();
        map_indexed(self.exec, self.len(), |node| {
            let mut d = [[0.0; 2]; 2];
            for i in 0..n {
                for j in i..n {
                    let v = self.apply_op(values, node, second_op(n, i, j), parity);
                    d[i][j] = v;
                    d[j][i] = v;
                }
            }
            d
        })
    }

    /// Components `u_i` of `∇̃u`.
    pub fn covariant_gradient(&self, u: &ScalarField) -> Result<Vec<Vec2>> {
        self.check_len(u.len())?;
        Ok(self.partials(u.values(), 1.0))
    }

    /// `∇̃²_ij u = ∂_ij u − Γ̃^k_ij ∂_k u`.
    pub fn covariant_hessian(&self, u: &ScalarField) -> Result<CotensorField> {
        self.check_len(u.len())?;
        let n = self.dim();
        let d1 = self.partials(u.values(), 1.0);
        let d2 = self.second_partials(u.values(), 1.0);
        let values = map_indexed(self.exec, self.len(), |node| {
            covariant_hessian_at(n, &d2[node], &d1[node], &self.christoffel[node])
        });
        Ok(CotensorField { dim: n, values })
    }
}

pub(crate) fn covariant_hessian_at(n: usize, d2: &Mat2, d1: &Vec2, gamma: &[Mat2; 2]) -> Mat2 {
    let mut h = [[0.0; 2]; 2];
    for i in 0..n {
        for j in 0..n {
            h[i][j] = d2[i][j] - (0..n).map(|k| gamma[k][i][j] * d1[k]).sum::<f64>();
        }
    }
    h
}

/// Nodal values of a function on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField(values)
    }

    pub fn constant(grid: &SphereGrid, c: f64) -> Self {
        ScalarField(vec![c; grid.len()])
    }

    pub fn from_fn(grid: &SphereGrid, f: impl Fn(&SpherePoint) -> f64) -> Self {
        ScalarField(grid.points().iter().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-node symmetric `n × n` coordinate components (padded to 2 × 2).
#[derive(Debug, Clone, PartialEq)]
pub struct CotensorField {
    pub dim: usize,
    pub values: Vec<Mat2>,
}

impl CotensorField {
    /// Largest coordinate component in absolute value.
    pub fn sup_norm(&self) -> f64 {
        let n = self.dim;
        self.values
            .iter()
            .flat_map(|m| (0..n).flat_map(move |i| (0..n).map(move |j| m[i][j].abs())))
            .fold(0.0, f64::max)
    }
}
