//! Prescription functions `ψ(r, ξ, τ)`, their structural audit, the barrier
//! scan, and the homotopy family `ψ_t = t ψ + (1 − t) Ψ` with
//! `Ψ = τ^p · u · tanh(u)`.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::grid::{SpherePoint, Vec2};
use crate::par::{map_indexed, Execution};

/// Value and partial derivatives of a prescription at `(r, ξ, τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PsiEval {
    pub value: f64,
    pub d_tau: f64,
    pub d_tau_tau: f64,
    pub d_r: f64,
    /// Partials in the intrinsic sphere coordinates, zero-padded.
    pub d_xi: Vec2,
}

impl PsiEval {
    fn affine(a: &PsiEval, wa: f64, b: &PsiEval, wb: f64) -> PsiEval {
        PsiEval {
            value: wa * a.value + wb * b.value,
            d_tau: wa * a.d_tau + wb * b.d_tau,
            d_tau_tau: wa * a.d_tau_tau + wb * b.d_tau_tau,
            d_r: wa * a.d_r + wb * b.d_r,
            d_xi: [wa * a.d_xi[0] + wb * b.d_xi[0], wa * a.d_xi[1] + wb * b.d_xi[1]],
        }
    }
}

/// A smooth prescription `ψ(r, ξ, τ)`, with `r` the radial coordinate of
/// `Y(r, ξ)` and `τ ≥ 1` the tilt.
pub trait Prescription: Debug + Send + Sync {
    fn name(&self) -> &'static str;
    fn params(&self) -> Vec<(&'static str, f64)>;
    fn eval(&self, r: f64, xi: &SpherePoint, tau: f64) -> PsiEval;
}

/// `ψ = (a₀ + a₁ cos ξ¹) · tanh(r) · τ^p`, where `ξ¹` is the first intrinsic
/// coordinate (θ on S¹, colatitude on S²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPrescription {
    pub base: f64,
    pub variation: f64,
    pub power: f64,
}

impl ModelPrescription {
    pub fn new(base: f64, variation: f64, power: f64) -> Result<Self> {
        if !(base - variation.abs() > 0.0) {
            return Err(Error::Domain(format!("model amplitude must stay positive: {base} ± {variation}")));
        }
        if !(power > 1.0) {
            return Err(Error::Domain(format!("model power must exceed 1, got {power}")));
        }
        Ok(ModelPrescription { base, variation, power })
    }
}

impl Prescription for ModelPrescription {
    fn name(&self) -> &'static str {
        "model"
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("base", self.base), ("variation", self.variation), ("power", self.power)]
    }
    fn eval(&self, r: f64, xi: &SpherePoint, tau: f64) -> PsiEval {
        let x = xi.coords()[0];
        let amp = self.base + self.variation * x.cos();
        let th = r.tanh();
        let p = self.power;
        let tp = tau.powf(p);
        let value = amp * th * tp;
        PsiEval {
            value,
            d_tau: amp * th * p * tau.powf(p - 1.0),
            d_tau_tau: amp * th * p * (p - 1.0) * tau.powf(p - 2.0),
            d_r: amp * (1.0 - th * th) * tp,
            d_xi: [-self.variation * x.sin() * th * tp, 0.0],
        }
    }
}

/// `ψ = c · τ^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauPower {
    pub scale: f64,
    pub power: f64,
}

impl Prescription for TauPower {
    fn name(&self) -> &'static str {
        "tau-power"
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("scale", self.scale), ("power", self.power)]
    }
    fn eval(&self, _r: f64, _xi: &SpherePoint, tau: f64) -> PsiEval {
        let (c, q) = (self.scale, self.power);
        PsiEval {
            value: c * tau.powf(q),
            d_tau: c * q * tau.powf(q - 1.0),
            d_tau_tau: c * q * (q - 1.0) * tau.powf(q - 2.0),
            ..Default::default()
        }
    }
}

/// `ψ = c · τ (2 − e^{−τ})`; concave in τ for `τ > 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcaveTau {
    pub scale: f64,
}

impl Prescription for ConcaveTau {
    fn name(&self) -> &'static str {
        "concave-tau"
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("scale", self.scale)]
    }
    fn eval(&self, _r: f64, _xi: &SpherePoint, tau: f64) -> PsiEval {
        let e = (-tau).exp();
        let c = self.scale;
        PsiEval {
            value: c * tau * (2.0 - e),
            d_tau: c * (2.0 - e + tau * e),
            d_tau_tau: c * (2.0 - tau) * e,
            ..Default::default()
        }
    }
}

/// `ψ ≡ c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPrescription {
    pub value: f64,
}

impl Prescription for ConstantPrescription {
    fn name(&self) -> &'static str {
        "constant"
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("value", self.value)]
    }
    fn eval(&self, _r: f64, _xi: &SpherePoint, _tau: f64) -> PsiEval {
        PsiEval { value: self.value, ..Default::default() }
    }
}

/// Homotopy start `Ψ = τ^p · r · tanh(r)`, whose umbilic solution is known exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePrescription {
    pub power: f64,
}

impl Prescription for ReferencePrescription {
    fn name(&self) -> &'static str {
        "reference"
    }
    fn params(&self) -> Vec<(&'static str, f64)> {
        vec![("power", self.power)]
    }
    fn eval(&self, r: f64, _xi: &SpherePoint, tau: f64) -> PsiEval {
        let p = self.power;
        let th = r.tanh();
        let w = r * th;
        PsiEval {
            value: tau.powf(p) * w,
            d_tau: p * tau.powf(p - 1.0) * w,
            d_tau_tau: p * (p - 1.0) * tau.powf(p - 2.0) * w,
            d_r: tau.powf(p) * (th + r * (1.0 - th * th)),
            d_xi: [0.0; 2],
        }
    }
}

/// `ψ_t = t ψ + (1 − t) Ψ`.
#[derive(Debug, Clone, Copy)]
pub struct HomotopyPrescription<'a> {
    target: &'a dyn Prescription,
    reference: ReferencePrescription,
    t: f64,
}

impl<'a> HomotopyPrescription<'a> {
    pub fn new(target: &'a dyn Prescription, power: f64, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("homotopy parameter t = {t} outside [0, 1]")));
        }
        if !(power >= 1.0) {
            return Err(Error::Domain(format!("reference power must be >= 1, got {power}")));
        }
        Ok(HomotopyPrescription { target, reference: ReferencePrescription { power }, t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn power(&self) -> f64 {
        self.reference.power
    }

    pub fn target(&self) -> &'a dyn Prescription {
        self.target
    }

    pub fn reference(&self) -> &ReferencePrescription {
        &self.reference
    }

    pub fn at(&self, t: f64) -> Result<Self> {
        HomotopyPrescription::new(self.target, self.reference.power, t)
    }

    /// `ψ_t(ξ, u, τ)` and its partials; `d_r` is the derivative in `u`.
    pub fn eval(&self, xi: &SpherePoint, u: f64, tau: f64) -> Result<PsiEval> {
        if !(u > 0.0) {
            return Err(Error::Domain(format!("homotopy prescription needs u > 0, got {u}")));
        }
        let t = self.t;
        if t == 0.0 {
            return Ok(self.reference.eval(u, xi, tau));
        }
        if t == 1.0 {
            return Ok(self.target.eval(u, xi, tau));
        }
        Ok(PsiEval::affine(&self.target.eval(u, xi, tau), t, &self.reference.eval(u, xi, tau), 1.0 - t))
    }

    /// `∂ψ_t/∂t = ψ − Ψ`.
    pub fn d_t(&self, xi: &SpherePoint, u: f64, tau: f64) -> f64 {
        self.target.eval(u, xi, tau).value - self.reference.eval(u, xi, tau).value
    }
}

/// Free-function form of [`HomotopyPrescription::eval`].
pub fn homotopy_eval(h: &HomotopyPrescription<'_>, xi: &SpherePoint, tau: f64, u: f64) -> Result<PsiEval> {
    h.eval(xi, u, tau)
}

// ---------------------------------------------------------------------------
// Barrier scan

/// Slice radii: `tanh r > ψ(r, ξ, cosh r)` for sampled `r ≤ r1`, and
/// `tanh r < ψ(r, ξ, cosh r)` for sampled `r ≥ r2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Barriers {
    pub r1: f64,
    pub r2: f64,
}

impl Barriers {
    /// Barriers valid for every convex combination of the two prescriptions.
    pub fn enclosing(self, other: Barriers) -> Barriers {
        Barriers { r1: self.r1.min(other.r1), r2: self.r2.max(other.r2) }
    }

    pub fn contains(&self, r: f64) -> bool {
        self.r1 <= r && r <= self.r2
    }
}

/// `tanh r − ψ(r, ξ, cosh r)` extremes over the sampled ξ at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceGap {
    pub r: f64,
    pub min_gap: f64,
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[error("barrier scan failed on r in [{r_lo}, {r_hi}] (lower found: {lower_found}, upper found: {upper_found})")]
pub struct BarrierScanFailure {
    pub r_lo: f64,
    pub r_hi: f64,
    pub lower_found: bool,
    pub upper_found: bool,
    pub sign_pattern: Vec<SliceGap>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSettings {
    pub r_lo: f64,
    pub r_hi: f64,
    /// Number of lattice intervals.
    pub steps: usize,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings { r_lo: 0.01, r_hi: 3.0, steps: 2990 }
    }
}

impl ScanSettings {
    pub fn step(&self) -> f64 {
        (self.r_hi - self.r_lo) / self.steps as f64
    }
}

pub fn scan_barriers(
    psi: &dyn Prescription,
    settings: ScanSettings,
    xi: &[SpherePoint],
) -> std::result::Result<Barriers, BarrierScanFailure> {
    scan_barriers_with(psi, settings, xi, Execution::default())
}

pub fn scan_barriers_with(
    psi: &dyn Prescription,
    settings: ScanSettings,
    xi: &[SpherePoint],
    exec: Execution,
) -> std::result::Result<Barriers, BarrierScanFailure> {
    let ScanSettings { r_lo, r_hi, steps } = settings;
    let fail = |pattern: Vec<SliceGap>, lower_found, upper_found| BarrierScanFailure {
        r_lo,
        r_hi,
        lower_found,
        upper_found,
        sign_pattern: pattern,
    };
    if !(r_lo > 0.0 && r_hi > r_lo && steps >= 2) || xi.is_empty() {
        return Err(fail(vec![], false, false));
    }
    let h = settings.step();
    let pattern: Vec<SliceGap> = map_indexed(exec, steps + 1, |j| {
        let r = r_lo + j as f64 * h;
        let (tr, cr) = (r.tanh(), r.cosh());
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in xi {
            let gap = tr - psi.eval(r, p, cr).value;
            lo = lo.min(gap);
            hi = hi.max(gap);
        }
        SliceGap { r, min_gap: lo, max_gap: hi }
    });
    let lower = pattern.iter().take_while(|s| s.min_gap > 0.0).count();
    let upper = pattern.iter().rev().take_while(|s| s.max_gap < 0.0).count();
    if lower == 0 || upper == 0 {
        return Err(fail(pattern, lower > 0, upper > 0));
    }
    let r1 = pattern[lower - 1].r;
    let r2 = pattern[pattern.len() - upper].r;
    if r1 >= r2 {
        return Err(fail(pattern, true, true));
    }
    Ok(Barriers { r1, r2 })
}

// ---------------------------------------------------------------------------
// Structural audit

/// Sample box for the audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditBox {
    pub r_lo: f64,
    pub r_hi: f64,
    pub tau_max: f64,
    pub n_r: usize,
    pub n_tau: usize,
    pub xi: Vec<SpherePoint>,
}

impl AuditBox {
    pub fn new(r_lo: f64, r_hi: f64, tau_max: f64, n_r: usize, n_tau: usize, xi: Vec<SpherePoint>) -> Result<Self> {
        if !(r_lo > 0.0 && r_hi > r_lo) {
            return Err(Error::Domain(format!("audit box needs 0 < r_lo < r_hi, got [{r_lo}, {r_hi}]")));
        }
        if !(tau_max >= 2.0) {
            return Err(Error::Domain(format!("audit box needs tau_max >= 2, got {tau_max}")));
        }
        if n_r < 2 || n_tau < 3 || xi.is_empty() {
            return Err(Error::Domain("audit box needs n_r >= 2, n_tau >= 3 and some xi samples".into()));
        }
        Ok(AuditBox { r_lo, r_hi, tau_max, n_r, n_tau, xi })
    }

    fn r_at(&self, i: usize) -> f64 {
        self.r_lo + (self.r_hi - self.r_lo) * i as f64 / (self.n_r - 1) as f64
    }

    fn tau_at(&self, m: usize) -> f64 {
        1.0 + (self.tau_max - 1.0) * m as f64 / (self.n_tau - 1) as f64
    }
}

/// Uniform ξ samples: `count` angles on S¹, or a `count × 2count` lattice on S².
pub fn xi_lattice(dim: usize, count: usize) -> Vec<SpherePoint> {
    use std::f64::consts::PI;
    match dim {
        1 => (0..count).map(|j| SpherePoint::Circle { theta: 2.0 * PI * j as f64 / count as f64 }).collect(),
        _ => (0..count)
            .flat_map(|i| {
                (0..2 * count).map(move |j| SpherePoint::Sphere {
                    colat: (i as f64 + 0.5) * PI / count as f64,
                    lon: PI * j as f64 / count as f64,
                })
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assumption {
    /// Barrier radii exist.
    A,
    /// `ψ_τ τ ≥ ψ`.
    B,
    /// `ψ/τ → ∞` (finite-sample surrogate).
    C,
    /// `|∂_x ψ| ≤ C ψ`.
    D,
    /// `ψ_ττ ≥ 0`.
    E,
    /// `ψ > 0`.
    Positivity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub assumption: Assumption,
    pub r: f64,
    pub xi: SpherePoint,
    pub tau: f64,
    /// The violating quantity (e.g. `ψ_τ τ − ψ` for B).
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralAudit {
    pub prescription: String,
    pub r_lo: f64,
    pub r_hi: f64,
    pub tau_max: f64,
    pub samples: usize,
    pub positive: bool,
    pub pass_a: bool,
    pub pass_b: bool,
    /// Checked on `[1, tau_max]` only.
    pub pass_c: bool,
    pub c_is_surrogate: bool,
    pub pass_d: bool,
    pub pass_e: bool,
    pub min_b_margin: f64,
    pub min_psi_tau_tau: f64,
    pub constant_d: f64,
    pub barriers: Option<Barriers>,
    pub barrier_failure: Option<BarrierScanFailure>,
    pub witnesses: Vec<Witness>,
}

impl StructuralAudit {
    /// Assumptions B–E and positivity (the barrier condition A is reported separately).
    pub fn structural_ok(&self) -> bool {
        self.positive && self.pass_b && self.pass_c && self.pass_d && self.pass_e
    }

    pub fn passed(&self) -> bool {
        self.structural_ok() && self.pass_a
    }
}

const AUDIT_TOL: f64 = 1e-12;
const MAX_WITNESSES: usize = 8;

/// Samples `ψ` on the box and checks assumptions A–E; A through [`scan_barriers`]
/// with `scan` and the box's ξ samples.
pub fn audit_structural(psi: &dyn Prescription, abox: &AuditBox, scan: ScanSettings) -> StructuralAudit {
    struct Cell {
        positive: Option<Witness>,
        b: (f64, Option<Witness>),
        c: Option<Witness>,
        d: f64,
        e: (f64, Option<Witness>),
    }

    let cells = abox.n_r * abox.xi.len();
    let results = map_indexed(Execution::default(), cells, |idx| {
        let r = abox.r_at(idx / abox.xi.len());
        let xi = abox.xi[idx % abox.xi.len()];
        let mut cell = Cell { positive: None, b: (f64::INFINITY, None), c: None, d: 0.0, e: (f64::INFINITY, None) };
        let wit = |assumption, tau, value| Witness { assumption, r, xi, tau, value };
        let mut prev_ratio: Option<(f64, f64)> = None;
        let mut monotone = true;
        let mut last_slope = 0.0;
        for m in 0..abox.n_tau {
            let tau = abox.tau_at(m);
            let ev = psi.eval(r, &xi, tau);
            if !(ev.value > 0.0) {
                cell.positive.get_or_insert(wit(Assumption::Positivity, tau, ev.value));
                continue;
            }
            let b = ev.d_tau * tau - ev.value;
            if b < cell.b.0 {
                cell.b.0 = b;
                if b < -AUDIT_TOL {
                    cell.b.1 = Some(wit(Assumption::B, tau, b));
                }
            }
            if ev.d_tau_tau < cell.e.0 {
                cell.e.0 = ev.d_tau_tau;
                if ev.d_tau_tau < -AUDIT_TOL {
                    cell.e.1 = Some(wit(Assumption::E, tau, ev.d_tau_tau));
                }
            }
            let dx = ev.d_r.abs().max(ev.d_xi[0].abs()).max(ev.d_xi[1].abs()) / ev.value;
            cell.d = cell.d.max(dx);
            let ratio = ev.value / tau;
            if let Some((pt, pr)) = prev_ratio {
                last_slope = (ratio - pr) / (tau - pt);
                if ratio < pr - AUDIT_TOL * pr.abs() && monotone {
                    monotone = false;
                    cell.c = Some(wit(Assumption::C, tau, last_slope));
                }
            }
            prev_ratio = Some((tau, ratio));
        }
        if monotone && !(last_slope > 0.0) {
            cell.c = Some(wit(Assumption::C, abox.tau_max, last_slope));
        }
        cell
    });

    let mut witnesses = Vec::new();
    let mut push = |w: &Option<Witness>, count: &mut usize| {
        if let Some(w) = w {
            if *count < MAX_WITNESSES {
                witnesses.push(w.clone());
            }
            *count += 1;
        }
    };
    let (mut np, mut nb, mut nc, mut ne) = (0, 0, 0, 0);
    let (mut min_b, mut min_e, mut const_d) = (f64::INFINITY, f64::INFINITY, 0.0_f64);
    for c in &results {
        push(&c.positive, &mut np);
        push(&c.b.1, &mut nb);
        push(&c.c, &mut nc);
        push(&c.e.1, &mut ne);
        min_b = min_b.min(c.b.0);
        min_e = min_e.min(c.e.0);
        const_d = const_d.max(c.d);
    }

    let (barriers, barrier_failure) = match scan_barriers(psi, scan, &abox.xi) {
        Ok(b) => (Some(b), None),
        Err(f) => (None, Some(f)),
    };

    StructuralAudit {
        prescription: psi.name().to_string(),
        r_lo: abox.r_lo,
        r_hi: abox.r_hi,
        tau_max: abox.tau_max,
        samples: cells * abox.n_tau,
        positive: np == 0,
        pass_a: barriers.is_some(),
        pass_b: nb == 0,
        pass_c: nc == 0,
        c_is_surrogate: true,
        pass_d: np == 0 && const_d.is_finite(),
        pass_e: ne == 0,
        min_b_margin: min_b,
        min_psi_tau_tau: min_e,
        constant_d: const_d,
        barriers,
        barrier_failure,
        witnesses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ModelPrescription {
        ModelPrescription::new(0.5, 0.0, 2.0).unwrap()
    }

    fn abox(dim: usize) -> AuditBox {
        AuditBox::new(0.1, 2.0, 20.0, 40, 60, xi_lattice(dim, 6)).unwrap()
    }

    fn check_derivatives(psi: &dyn Prescription) {
        let pts = [
            (0.3, SpherePoint::Sphere { colat: 0.7, lon: 1.9 }, 1.3),
            (1.2, SpherePoint::Sphere { colat: 2.2, lon: 4.0 }, 3.7),
            (0.8, SpherePoint::Circle { theta: 1.1 }, 2.0),
        ];
        let h = 1e-5;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1e-8);
        for (r, xi, tau) in pts {
            let e = psi.eval(r, &xi, tau);
            let f = |r: f64, tau: f64| psi.eval(r, &xi, tau);
            let dt = (f(r, tau + h).value - f(r, tau - h).value) / (2.0 * h);
            let dtt = (f(r, tau + h).d_tau - f(r, tau - h).d_tau) / (2.0 * h);
            let dr = (f(r + h, tau).value - f(r - h, tau).value) / (2.0 * h);
            assert!(close(e.d_tau, dt), "{}: d_tau {} vs {}", psi.name(), e.d_tau, dt);
            assert!(close(e.d_tau_tau, dtt), "{}: d_tau_tau {} vs {}", psi.name(), e.d_tau_tau, dtt);
            assert!(close(e.d_r, dr), "{}: d_r {} vs {}", psi.name(), e.d_r, dr);
            let shifted = match xi {
                SpherePoint::Sphere { colat, lon } => SpherePoint::Sphere { colat: colat + h, lon },
                SpherePoint::Circle { theta } => SpherePoint::Circle { theta: theta + h },
            };
            let back = match xi {
                SpherePoint::Sphere { colat, lon } => SpherePoint::Sphere { colat: colat - h, lon },
                SpherePoint::Circle { theta } => SpherePoint::Circle { theta: theta - h },
            };
            let dx = (psi.eval(r, &shifted, tau).value - psi.eval(r, &back, tau).value) / (2.0 * h);
            assert!(close(e.d_xi[0], dx), "{}: d_xi {} vs {}", psi.name(), e.d_xi[0], dx);
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        check_derivatives(&ModelPrescription::new(0.5, 0.1, 2.0).unwrap());
        check_derivatives(&ModelPrescription::new(0.7, -0.2, 1.5).unwrap());
        check_derivatives(&TauPower { scale: 1.0, power: 0.5 });
        check_derivatives(&ConcaveTau { scale: 1.0 });
        check_derivatives(&ConstantPrescription { value: 0.2 });
        check_derivatives(&ReferencePrescription { power: 2.0 });
    }

    #[test]
    fn model_validation() {
        assert!(ModelPrescription::new(0.5, 0.6, 2.0).is_err());
        assert!(ModelPrescription::new(0.5, 0.1, 1.0).is_err());
    }

    #[test]
    fn audit_passes_model() {
        for dim in [1, 2] {
            let a = audit_structural(&model(), &abox(dim), ScanSettings::default());
            assert!(a.passed(), "{a:?}");
            assert!(a.witnesses.is_empty());
            // ψ_τ τ = 2ψ, so ψ_τ τ − ψ = ψ ≥ min ψ on the box.
            let min_psi = 0.5 * 0.1f64.tanh();
            assert!((a.min_b_margin - min_psi).abs() < 1e-12);
            // D: max sech²r / tanh r = 2 / sinh(2r) at r = 0.1.
            assert!((a.constant_d - 2.0 / 0.2f64.sinh()).abs() < 1e-10);
        }
    }

    #[test]
    fn audit_flags_square_root_on_b() {
        let a = audit_structural(&TauPower { scale: 1.0, power: 0.5 }, &abox(2), ScanSettings::default());
        assert!(!a.pass_b);
        assert!(!a.passed());
        let w = a.witnesses.iter().find(|w| w.assumption == Assumption::B).unwrap();
        // ψ_τ τ − ψ = −ψ/2.
        assert!((w.value + 0.5 * w.tau.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn audit_flags_concave_example_on_e() {
        let a = audit_structural(&ConcaveTau { scale: 1.0 }, &abox(1), ScanSettings::default());
        assert!(a.pass_b);
        assert!(!a.pass_e);
        let w = a.witnesses.iter().find(|w| w.assumption == Assumption::E).unwrap();
        assert!(w.tau > 2.0 && w.value < 0.0);
    }

    #[test]
    fn audit_flags_constant_on_barrier() {
        let a = audit_structural(&ConstantPrescription { value: 0.2 }, &abox(2), ScanSettings::default());
        assert!(!a.pass_a);
        let f = a.barrier_failure.as_ref().unwrap();
        assert!(!f.lower_found);
        assert!(f.sign_pattern[0].max_gap < 0.0);
    }

    #[test]
    fn non_positive_prescription_fails_with_witness() {
        let a = audit_structural(&ConstantPrescription { value: -1.0 }, &abox(1), ScanSettings::default());
        assert!(!a.positive);
        assert!(a.witnesses.iter().any(|w| w.assumption == Assumption::Positivity));
    }

    #[test]
    fn barriers_of_closed_form_model() {
        let settings = ScanSettings { r_lo: 0.01, r_hi: 3.0, steps: 2990 };
        let b = scan_barriers(&model(), settings, &xi_lattice(2, 4)).unwrap();
        let r_star = (1.0 + 2f64.sqrt()).ln();
        assert!((r_star - 0.881374).abs() < 1e-6);
        assert!(b.r1 < r_star && r_star - b.r1 <= settings.step() + 1e-12);
        assert!(b.r2 > r_star && b.r2 - r_star <= settings.step() + 1e-12);
    }

    #[test]
    fn reference_slice_has_barriers_in_unit_interval() {
        // φ(x) = x cosh^p(x) has φ(0) = 0 and φ(1) > 1.
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert!(1f64.cosh().powf(p) > 1.0);
            let b = scan_barriers(
                &ReferencePrescription { power: p },
                ScanSettings { r_lo: 0.001, r_hi: 1.0, steps: 999 },
                &xi_lattice(1, 4),
            )
            .unwrap();
            assert!(0.0 < b.r1 && b.r2 <= 1.0);
        }
    }

    #[test]
    fn constant_has_no_lower_barrier() {
        let err = scan_barriers(&ConstantPrescription { value: 0.2 }, ScanSettings::default(), &xi_lattice(1, 4))
            .unwrap_err();
        // tanh r < 0.2 near the origin and > 0.2 far out: neither barrier exists.
        assert!(!err.lower_found);
        assert!(!err.upper_found);
        assert!(err.sign_pattern.first().unwrap().max_gap < 0.0);
        assert!(err.sign_pattern.last().unwrap().min_gap > 0.0);
    }

    #[test]
    fn homotopy_endpoints_and_midpoint() {
        let target = model();
        let xi = SpherePoint::Circle { theta: 0.4 };
        let (u, tau) = (0.8, 1.4);
        let h0 = HomotopyPrescription::new(&target, 2.0, 0.0).unwrap();
        let h1 = h0.at(1.0).unwrap();
        assert_eq!(h0.eval(&xi, u, tau).unwrap(), ReferencePrescription { power: 2.0 }.eval(u, &xi, tau));
        assert_eq!(h1.eval(&xi, u, tau).unwrap(), target.eval(u, &xi, tau));
        let mid = h0.at(0.5).unwrap().eval(&xi, u, tau).unwrap().value;
        let th = 0.8f64.tanh();
        let hand = 0.5 * (0.5 * th * 1.96) + 0.5 * (1.96 * 0.8 * th);
        assert!((mid - hand).abs() < 1e-15);
    }

    #[test]
    fn homotopy_rejects_bad_inputs() {
        let target = model();
        assert!(HomotopyPrescription::new(&target, 2.0, 1.5).is_err());
        let h = HomotopyPrescription::new(&target, 2.0, 0.3).unwrap();
        assert!(h.eval(&SpherePoint::Circle { theta: 0.0 }, 0.0, 1.0).is_err());
        assert!(homotopy_eval(&h, &SpherePoint::Circle { theta: 0.0 }, 1.0, -0.1).is_err());
    }

    #[test]
    fn enclosing_barriers() {
        let a = Barriers { r1: 0.7, r2: 0.9 };
        let b = Barriers { r1: 0.6, r2: 0.8 };
        assert_eq!(a.enclosing(b), Barriers { r1: 0.6, r2: 0.9 });
    }
}
