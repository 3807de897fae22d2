//! Elementary and normalized symmetric functions of principal curvatures,
//! their gradient, and membership in the Gårding cone Γ_k.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;

/// Principal curvatures at a point, in no particular order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenTuple(Vec<f64>);

impl EigenTuple {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTuple);
        }
        Ok(EigenTuple(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Euclidean norm `sqrt(Σ λ_i²)`.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for EigenTuple {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        EigenTuple::new(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeReport {
    pub k: usize,
    pub member: bool,
    /// `S_1 .. S_k`.
    pub sigma_values: Vec<f64>,
}

impl ConeReport {
    /// `min_j S_j`, the distance-like margin used by the monitors.
    pub fn margin(&self) -> f64 {
        self.sigma_values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    Ok(())
}

/// `[S_0, S_1, ..., S_k]` by the product recursion on the characteristic
/// polynomial `Π (1 + λ_i x)`.
fn sigma_upto(values: &[f64], k: usize) -> Vec<f64> {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for (i, &l) in values.iter().enumerate() {
        for j in (1..=k.min(i + 1)).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e
}

/// `S_k(λ)`.
pub fn elementary_symmetric(lambda: &EigenTuple, k: usize) -> Result<f64> {
    check_order(lambda.dim(), k)?;
    Ok(sigma_upto(lambda.values(), k)[k])
}

/// `S_j(λ)` with `λ_skip` removed; `S_0 = 1`.
fn sigma_without(values: &[f64], skip: usize, j: usize) -> f64 {
    let mut e = vec![0.0; j + 1];
    e[0] = 1.0;
    let mut seen = 0;
    for (i, &l) in values.iter().enumerate() {
        if i == skip {
            continue;
        }
        seen += 1;
        for m in (1..=j.min(seen)).rev() {
            e[m] += l * e[m - 1];
        }
    }
    e[j]
}

pub fn in_gamma_k(lambda: &EigenTuple, k: usize) -> Result<ConeReport> {
    check_order(lambda.dim(), k)?;
    let s = sigma_upto(lambda.values(), k);
    let sigma_values = s[1..].to_vec();
    // Open cone: S_j = 0 is outside.
    let member = sigma_values.iter().all(|&v| v > 0.0);
    Ok(ConeReport { k, member, sigma_values })
}

/// `f(λ) = H_k(λ)^{1/k}` with `H_k = S_k / C(n,k)`.
pub fn normalized_root(lambda: &EigenTuple, k: usize) -> Result<f64> {
    let cone = in_gamma_k(lambda, k)?;
    if !cone.member {
        return Err(Error::NotAdmissible { k });
    }
    let hk = cone.sigma_values[k - 1] / binomial(lambda.dim(), k);
    Ok(hk.powf(1.0 / k as f64))
}

/// `∂f/∂λ_i = f / (k S_k) · S_{k-1}(λ|i)`.
pub fn grad_f(lambda: &EigenTuple, k: usize) -> Result<EigenTuple> {
    let cone = in_gamma_k(lambda, k)?;
    if !cone.member {
        return Err(Error::NotAdmissible { k });
    }
    let n = lambda.dim();
    let sk = cone.sigma_values[k - 1];
    let f = (sk / binomial(n, k)).powf(1.0 / k as f64);
    let scale = f / (k as f64 * sk);
    let grad = (0..n).map(|i| scale * sigma_without(lambda.values(), i, k - 1)).collect();
    Ok(EigenTuple(grad))
}

/// `H_1`, the mean of the entries.
pub fn mean(lambda: &EigenTuple) -> f64 {
    lambda.values().iter().sum::<f64>() / lambda.dim() as f64
}

/// `S_1, S_2` (padded with `S_0 = 1`) of an `n × n` matrix, `n ≤ 2`, via its
/// principal minors. Equals the symmetric functions of its eigenvalues.
pub(crate) fn matrix_sigmas<T: Real>(m: &[[T; 2]; 2], n: usize) -> [T; 3] {
    match n {
        1 => [T::cst(1.0), m[0][0], T::cst(0.0)],
        _ => [T::cst(1.0), m[0][0] + m[1][1], m[0][0] * m[1][1] - m[0][1] * m[1][0]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[f64]) -> EigenTuple {
        EigenTuple::new(v.to_vec()).unwrap()
    }

    /// Subset-enumeration oracle for `S_k`.
    fn sigma_enumerate(v: &[f64], k: usize) -> f64 {
        let n = v.len();
        (0u32..(1 << n))
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| v[i]).product::<f64>())
            .sum()
    }

    #[test]
    fn elementary_examples() {
        assert_eq!(elementary_symmetric(&t(&[1.0, 1.0, 1.0]), 3).unwrap(), 1.0);
        assert_eq!(elementary_symmetric(&t(&[1.0, 2.0, 3.0]), 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&t(&[2.0, -1.0]), 2).unwrap(), -2.0);
        assert_eq!(sigma_enumerate(&[1.0, 2.0, 3.0], 2), 11.0);
    }

    #[test]
    fn order_out_of_range() {
        assert!(matches!(
            elementary_symmetric(&t(&[1.0, 2.0]), 3),
            Err(Error::OrderOutOfRange { k: 3, n: 2 })
        ));
        assert!(elementary_symmetric(&t(&[1.0, 2.0]), 0).is_err());
        assert!(in_gamma_k(&t(&[1.0]), 2).is_err());
    }

    #[test]
    fn tuple_validation() {
        assert!(EigenTuple::new(vec![]).is_err());
        assert!(EigenTuple::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn recursion_matches_enumeration() {
        let v = [0.3, -1.2, 2.5, 0.7, -0.4];
        for k in 1..=5 {
            let a = elementary_symmetric(&t(&v), k).unwrap();
            let b = sigma_enumerate(&v, k);
            assert!((a - b).abs() < 1e-12, "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn normalized_root_examples() {
        for k in 1..=4 {
            assert!((normalized_root(&t(&[1.0; 4]), k).unwrap() - 1.0).abs() < 1e-15);
            assert!((normalized_root(&t(&[2.5; 4]), k).unwrap() - 2.5).abs() < 1e-14);
        }
        let f = normalized_root(&t(&[1.0, 2.0, 3.0]), 2).unwrap();
        assert!((f - (11.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((f - 1.914854).abs() < 1e-6);
        assert_eq!(normalized_root(&t(&[2.0, -1.0]), 2), Err(Error::NotAdmissible { k: 2 }));
    }

    #[test]
    fn grad_examples() {
        let g = grad_f(&t(&[1.0, 1.0, 1.0]), 2).unwrap();
        for x in g.values() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let g = grad_f(&t(&[-0.3, 4.0]), 1).unwrap();
        assert_eq!(g.values(), &[0.5, 0.5]);
        assert!(grad_f(&t(&[2.0, -1.0]), 2).is_err());
    }

    #[test]
    fn grad_matches_finite_differences() {
        let lam = [0.4, -0.1, 1.3];
        for k in 1..=3 {
            if !in_gamma_k(&t(&lam), k).unwrap().member {
                continue;
            }
            let g = grad_f(&t(&lam), k).unwrap();
            for i in 0..3 {
                let h = 1e-6;
                let mut p = lam;
                let mut m = lam;
                p[i] += h;
                m[i] -= h;
                let fd = (normalized_root(&t(&p), k).unwrap() - normalized_root(&t(&m), k).unwrap()) / (2.0 * h);
                assert!((fd - g.values()[i]).abs() <= 1e-6 * fd.abs().max(1e-3), "k={k} i={i}");
            }
        }
    }

    #[test]
    fn cone_examples() {
        assert!(in_gamma_k(&t(&[1.0, 1.0, 1.0]), 3).unwrap().member);
        let r = in_gamma_k(&t(&[2.0, -1.0]), 2).unwrap();
        assert!(!r.member);
        assert_eq!(r.sigma_values, vec![1.0, -2.0]);
        let r = in_gamma_k(&t(&[-0.1, 1.0, 1.0]), 2).unwrap();
        assert!(r.member);
        assert!((r.sigma_values[0] - 1.9).abs() < 1e-15);
        assert!((r.sigma_values[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn boundary_is_outside() {
        // S_2 = 0 exactly.
        assert!(!in_gamma_k(&t(&[1.0, 0.0]), 2).unwrap().member);
        assert!(in_gamma_k(&t(&[1.0, 0.0]), 1).unwrap().member);
    }

    #[test]
    fn matrix_sigmas_match_eigenvalues() {
        let m = [[1.5, 0.25], [0.5, -0.75]];
        let s = matrix_sigmas(&m, 2);
        assert!((s[1] - 0.75).abs() < 1e-15);
        assert!((s[2] - (1.5 * -0.75 - 0.125)).abs() < 1e-15);
    }
}
