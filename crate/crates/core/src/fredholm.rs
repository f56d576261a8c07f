//! The sine-kernel integral operator on `[0, K]`.
//!
//! `T f(x) = ∫_0^K K_Dyson(x, y) f(y) dy` is discretized by the Nyström
//! method on Gauss-Legendre nodes. The symmetrized matrix
//! `A_ij = sqrt(w_i) K_Dyson(x_i, x_j) sqrt(w_j)` has the same spectrum as
//! the discretized operator, and because the kernel is entire the
//! eigenvalues converge spectrally in the number of nodes.
//!
//! The eigenvalues `p_1 >= p_2 >= ...` lie in `[0, 1]` and sum to `K`. They
//! give the Fredholm determinant `det(1 - T) = Π (1 - p_j)` and the
//! limiting law of the eigenvalue count in a window of `K` mean spacings,
//! a sum of independent Bernoulli(`p_j`) indicators.

use crate::error::{Error, Result};
use crate::kernels::{k_dyson, rho_dyson};
use crate::quadrature::{integrate_cube, GaussLegendre};
use crate::spectra::eigen::symmetric_eigen;

/// Default Nyström order.
pub const DEFAULT_ORDER: usize = 80;

/// Eigenvalues below this are dropped.
pub const TRUNCATION: f64 = 1e-16;

#[derive(Debug, Clone)]
pub struct SineOperator {
    pub length: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Row-major `m x m` symmetrized kernel matrix.
    pub matrix: Vec<f64>,
}

impl SineOperator {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn trace(&self) -> f64 {
        let m = self.order();
        (0..m).map(|i| self.matrix[i * m + i]).sum()
    }
}

/// Nyström discretization of `T` on `[0, K]` with `m >= 10` nodes.
pub fn discretize(length: f64, m: usize) -> Result<SineOperator> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "interval length must be positive, got {length}"
        )));
    }
    if m < 10 {
        return Err(Error::InvalidArgument(format!(
            "Nyström order must be at least 10, got {m}"
        )));
    }
    let rule = GaussLegendre::on_interval(m, 0.0, length);
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut matrix = vec![0.0; m * m];
    for i in 0..m {
        matrix[i * m + i] = rule.weights[i];
        for j in 0..i {
            let a = sw[i] * k_dyson(rule.nodes[i], rule.nodes[j]) * sw[j];
            matrix[i * m + j] = a;
            matrix[j * m + i] = a;
        }
    }
    Ok(SineOperator {
        length,
        nodes: rule.nodes,
        weights: rule.weights,
        matrix,
    })
}

/// Eigenvalues `p_j` (descending) and, optionally, the discretized
/// eigenfunctions `φ_j(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpectrum {
    pub p: Vec<f64>,
    /// `eigenfunctions[j][i] = φ_j(x_i)`, normalized in the quadrature inner
    /// product `Σ_i w_i φ_j(x_i) φ_l(x_i)`.
    pub eigenfunctions: Option<Vec<Vec<f64>>>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl OperatorSpectrum {
    /// Spectrum from given eigenvalues alone (no discretization attached).
    pub fn from_eigenvalues(mut p: Vec<f64>) -> Self {
        p.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
        p.sort_by(|a, b| b.total_cmp(a));
        Self {
            p,
            eigenfunctions: None,
            nodes: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Quadrature inner product of two eigenfunctions.
    pub fn inner_product(&self, j: usize, l: usize) -> Option<f64> {
        let phi = self.eigenfunctions.as_ref()?;
        Some(
            self.weights
                .iter()
                .zip(phi[j].iter().zip(&phi[l]))
                .map(|(w, (a, b))| w * a * b)
                .sum(),
        )
    }

    /// `Σ_j p_j φ_j(x_i) φ_j(x_l)`, which should reproduce `K_Dyson(x_i, x_l)`.
    pub fn reconstruct_kernel(&self, i: usize, l: usize) -> Option<f64> {
        let phi = self.eigenfunctions.as_ref()?;
        Some(
            self.p
                .iter()
                .zip(phi)
                .map(|(p, f)| p * f[i] * f[l])
                .sum(),
        )
    }
}

/// Symmetric eigendecomposition of the Nyström matrix. Eigenvalues are
/// clamped to `[0, 1]`, sorted descending and truncated below `1e-16`.
pub fn operator_spectrum(op: &SineOperator) -> Result<OperatorSpectrum> {
    let m = op.order();
    let (values, vectors) = symmetric_eigen(&op.matrix, m, true)?;
    let q = vectors.expect("vectors requested");
    let mut p = Vec::new();
    let mut eigenfunctions = Vec::new();
    for idx in (0..m).rev() {
        let v = values[idx].clamp(0.0, 1.0);
        if v < TRUNCATION {
            break;
        }
        p.push(v);
        eigenfunctions.push(
            (0..m)
                .map(|i| q[i * m + idx] / op.weights[i].sqrt())
                .collect::<Vec<f64>>(),
        );
    }
    Ok(OperatorSpectrum {
        p,
        eigenfunctions: Some(eigenfunctions),
        nodes: op.nodes.clone(),
        weights: op.weights.clone(),
    })
}

/// `Π (1 - p_j)`.
pub fn fredholm_det(spec: &OperatorSpectrum) -> f64 {
    spec.p.iter().map(|p| 1.0 - p).product()
}

/// Convenience: `det(1 - T)` on `[0, length]` at Nyström order `m`.
pub fn fredholm_det_at(length: f64, m: usize) -> Result<f64> {
    Ok(fredholm_det(&operator_spectrum(&discretize(length, m)?)?))
}

/// Law of `Σ ξ_j` with independent `ξ_j ~ Bernoulli(p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonBinomial {
    pub p: Vec<f64>,
    /// `pmf[c] = P(Σ ξ_j = c)`, `c = 0..=p.len()`.
    pub pmf: Vec<f64>,
}

impl PoissonBinomial {
    pub fn new(p: &[f64]) -> Self {
        let mut pmf = Vec::with_capacity(p.len() + 1);
        pmf.push(1.0);
        for &q in p {
            pmf.push(0.0);
            for c in (1..pmf.len()).rev() {
                pmf[c] = pmf[c] * (1.0 - q) + pmf[c - 1] * q;
            }
            pmf[0] *= 1.0 - q;
        }
        Self { p: p.to_vec(), pmf }
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(c, w)| c as f64 * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.pmf
            .iter()
            .enumerate()
            .map(|(c, w)| (c as f64 - mu).powi(2) * w)
            .sum()
    }

    pub fn prob(&self, c: usize) -> f64 {
        self.pmf.get(c).copied().unwrap_or(0.0)
    }
}

pub fn limiting_counting_law(spec: &OperatorSpectrum) -> PoissonBinomial {
    PoissonBinomial::new(&spec.p)
}

/// `e_k(p_1, p_2, …)`, the coefficient of `z^k` in `Π (1 + p_j z)`.
/// Equals `E binom(Σ ξ_j, k)` under the limiting law.
pub fn elementary_symmetric(spec: &OperatorSpectrum, k: usize) -> f64 {
    elementary_symmetric_all(&spec.p, k)[k]
}

/// `e_0..=e_kmax` of `p`.
pub fn elementary_symmetric_all(p: &[f64], kmax: usize) -> Vec<f64> {
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for &q in p {
        for k in (1..=kmax).rev() {
            e[k] += q * e[k - 1];
        }
    }
    e
}

/// `(1/k!) ∫_{[0,K]^k} ρ_Dyson^{(k)}` by direct tensor Gauss-Legendre with
/// `m` nodes per axis; an independent route to `e_k(p)`.
pub fn dyson_moment(k: usize, length: f64, m: usize) -> Result<f64> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "direct sine-kernel moment quadrature supports k in 1..=3, got {k}"
        )));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "interval length must be positive, got {length}"
        )));
    }
    let rule = GaussLegendre::on_interval(m.max(1), 0.0, length);
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    Ok(integrate_cube(&rule, k, rho_dyson) / factorial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weights_sum_to_length() {
        for length in [0.01, 1.0, 2.5] {
            let op = discretize(length, 40).unwrap();
            assert!((op.weights.iter().sum::<f64>() - length).abs() < 1e-12);
            assert!(op.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn trace_is_length_at_every_order() {
        let a = discretize(1.0, 40).unwrap().trace();
        let b = discretize(1.0, 80).unwrap().trace();
        assert!((a - b).abs() < 1e-12);
        assert!((a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_symmetric_and_psd() {
        let op = discretize(2.0, 80).unwrap();
        let m = op.order();
        for i in 0..m {
            for j in 0..m {
                assert!((op.matrix[i * m + j] - op.matrix[j * m + i]).abs() <= 1e-14);
            }
        }
        let (vals, _) = symmetric_eigen(&op.matrix, m, false).unwrap();
        assert!(vals[0] >= -1e-12, "min eigenvalue {}", vals[0]);
    }

    #[test]
    fn invalid_discretization() {
        assert!(discretize(0.0, 40).is_err());
        assert!(discretize(1.0, 9).is_err());
    }

    #[test]
    fn short_interval_is_nearly_rank_one() {
        let s = operator_spectrum(&discretize(0.01, 80).unwrap()).unwrap();
        assert!(s.p[0] < 0.01);
        assert!(s.p[1..].iter().all(|&p| p < 1e-6));
        assert!(fredholm_det_at(1e-3, 80).unwrap() > 0.999);
    }

    #[test]
    fn trace_formula() {
        for length in [0.5, 1.0, 2.0] {
            let s = operator_spectrum(&discretize(length, 80).unwrap()).unwrap();
            assert!((s.sum() - length).abs() < 1e-10, "K={length}: {}", s.sum());
            assert!(s.p.windows(2).all(|w| w[0] >= w[1]));
            assert!(s.p.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn superpolynomial_decay() {
        let s = operator_spectrum(&discretize(1.0, 120).unwrap()).unwrap();
        let p = |j: usize| s.p.get(j - 1).copied().unwrap_or(0.0);
        assert!(p(10) / p(5) < 1e-6);
        assert!(p(15) < 1e-14);
    }

    #[test]
    fn eigenvalues_converge_under_refinement() {
        for length in [0.5, 2.0, 4.0] {
            let a = operator_spectrum(&discretize(length, 60).unwrap()).unwrap();
            let b = operator_spectrum(&discretize(length, 120).unwrap()).unwrap();
            for (x, y) in a.p.iter().zip(&b.p) {
                if x.min(*y) > 1e-12 {
                    assert!((x - y).abs() < 1e-10, "K={length}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn eigenfunctions_orthonormal_and_reconstruct_kernel() {
        let s = operator_spectrum(&discretize(1.0, 80).unwrap()).unwrap();
        let r = s.p.len();
        for j in 0..r {
            for l in 0..r {
                let ip = s.inner_product(j, l).unwrap();
                let expected = if j == l { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() <= 1e-10, "({j},{l}) of {r}: {ip}");
            }
        }
        for i in (0..80).step_by(7) {
            for l in (0..80).step_by(5) {
                let k = k_dyson(s.nodes[i], s.nodes[l]);
                assert!((s.reconstruct_kernel(i, l).unwrap() - k).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(fredholm_det(&OperatorSpectrum::from_eigenvalues(vec![])), 1.0);
        assert_eq!(fredholm_det(&OperatorSpectrum::from_eigenvalues(vec![1.0])), 0.0);
        let dets: Vec<f64> = [0.5, 1.0, 1.5, 2.0]
            .iter()
            .map(|&k| fredholm_det_at(k, 80).unwrap())
            .collect();
        assert!(dets.windows(2).all(|w| w[0] > w[1]), "{dets:?}");
    }

    #[test]
    fn determinant_converges_in_order() {
        for length in [0.5, 1.0, 2.0] {
            let a = fredholm_det_at(length, 40).unwrap();
            let b = fredholm_det_at(length, 80).unwrap();
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn poisson_binomial_examples() {
        assert_eq!(PoissonBinomial::new(&[0.5]).pmf, vec![0.5, 0.5]);
        assert_eq!(PoissonBinomial::new(&[0.5, 0.5]).pmf, vec![0.25, 0.5, 0.25]);
        let s = operator_spectrum(&discretize(1.0, 80).unwrap()).unwrap();
        let law = limiting_counting_law(&s);
        assert!((law.pmf[0] - fredholm_det(&s)).abs() < 1e-12);
    }

    #[test]
    fn elementary_symmetric_examples() {
        let half = OperatorSpectrum::from_eigenvalues(vec![0.5, 0.5]);
        assert_eq!(elementary_symmetric(&half, 2), 0.25);
        assert_eq!(elementary_symmetric(&half, 3), 0.0);
        let s = operator_spectrum(&discretize(1.0, 80).unwrap()).unwrap();
        assert!((elementary_symmetric(&s, 1) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn elementary_symmetric_equals_binomial_moments() {
        let s = operator_spectrum(&discretize(1.5, 80).unwrap()).unwrap();
        let law = limiting_counting_law(&s);
        for k in 1..=4usize {
            let binom_moment: f64 = law
                .pmf
                .iter()
                .enumerate()
                .map(|(c, w)| {
                    let b: f64 = (0..k).map(|i| (c as f64 - i as f64) / (i + 1) as f64).product();
                    w * if c >= k { b } else { 0.0 }
                })
                .sum();
            assert!((binom_moment - elementary_symmetric(&s, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_moments_match_spectral_route() {
        assert!((dyson_moment(1, 0.7, 20).unwrap() - 0.7).abs() < 1e-14);
        for length in [0.5, 1.0] {
            let s = operator_spectrum(&discretize(length, 80).unwrap()).unwrap();
            let e2 = elementary_symmetric(&s, 2);
            let d2 = dyson_moment(2, length, 40).unwrap();
            assert!((e2 - d2).abs() < 1e-8, "K={length}: {e2} vs {d2}");
            assert!(d2 <= length * length / 2.0);
        }
        let s = operator_spectrum(&discretize(2.0, 80).unwrap()).unwrap();
        let e3 = elementary_symmetric(&s, 3);
        let d3 = dyson_moment(3, 2.0, 30).unwrap();
        assert!((e3 - d3).abs() < 1e-8, "{e3} vs {d3}");
        assert!(dyson_moment(4, 1.0, 10).is_err());
    }

    proptest! {
        #[test]
        fn poisson_binomial_invariants(p in proptest::collection::vec(0.0f64..=1.0, 0..25)) {
            let law = PoissonBinomial::new(&p);
            prop_assert!(law.pmf.iter().all(|&w| w >= 0.0));
            prop_assert!((law.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let sum: f64 = p.iter().sum();
            let var: f64 = p.iter().map(|q| q * (1.0 - q)).sum();
            prop_assert!((law.mean() - sum).abs() < 1e-12);
            prop_assert!((law.variance() - var).abs() < 1e-11);
            let spec = OperatorSpectrum::from_eigenvalues(p.clone());
            prop_assert!((law.pmf[0] - fredholm_det(&spec)).abs() < 1e-12);
        }
    }
}
