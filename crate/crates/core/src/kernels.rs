//! Analytic reference objects: the semicircle law, the Dyson sine kernel and
//! its determinantal correlation functions, and the finite-n GUE kernel.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{composite, integrate_cube};

/// Semicircle density `(1/2π) sqrt((4 - x^2)_+)`.
pub fn rho_sc(x: f64) -> f64 {
    let r = 4.0 - x * x;
    if r <= 0.0 {
        0.0
    } else {
        r.sqrt() / (2.0 * PI)
    }
}

/// `∫_{-2}^{x} rho_sc`.
pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (0.5 * x).asin() / PI
    }
}

/// An energy strictly inside `(-2, 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkEnergy(f64);

impl BulkEnergy {
    pub fn new(u: f64) -> Result<Self> {
        if u > -2.0 && u < 2.0 {
            Ok(Self(u))
        } else {
            Err(Error::OutsideBulk(u))
        }
    }

    /// Requires `|u| <= 2 - margin`.
    pub fn with_margin(u: f64, margin: f64) -> Result<Self> {
        if u.abs() <= 2.0 - margin {
            Self::new(u)
        } else {
            Err(Error::OutsideBulk(u))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn density(self) -> f64 {
        rho_sc(self.0)
    }
}

/// `sin(π(t' - t)) / (π(t' - t))`, with the Taylor form near the diagonal.
pub fn k_dyson(t: f64, tp: f64) -> f64 {
    let d = tp - t;
    if d.abs() < 1e-6 {
        let x = PI * d;
        1.0 - x * x / 6.0
    } else {
        let x = PI * d;
        x.sin() / x
    }
}

/// Determinant of a small dense row-major matrix by partial-pivot LU.
pub fn determinant(mut a: Vec<f64>, k: usize) -> f64 {
    debug_assert_eq!(a.len(), k * k);
    let mut det = 1.0;
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i * k + col].abs().total_cmp(&a[j * k + col].abs()))
            .expect("nonempty range");
        if a[pivot * k + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..k {
                a.swap(pivot * k + j, col * k + j);
            }
            det = -det;
        }
        let p = a[col * k + col];
        det *= p;
        for i in col + 1..k {
            let f = a[i * k + col] / p;
            if f != 0.0 {
                for j in col..k {
                    a[i * k + j] -= f * a[col * k + j];
                }
            }
        }
    }
    det
}

/// `det[K_Dyson(t_i, t_j)]`, the `k`-point sine-kernel correlation.
pub fn rho_dyson(t: &[f64]) -> f64 {
    let k = t.len();
    match k {
        0 => 1.0,
        1 => 1.0,
        2 => {
            let s = k_dyson(t[0], t[1]);
            1.0 - s * s
        }
        _ => {
            let mut m = vec![0.0; k * k];
            for i in 0..k {
                for j in 0..k {
                    m[i * k + j] = k_dyson(t[i], t[j]);
                }
            }
            determinant(m, k)
        }
    }
}

/// Hermite oscillator functions `ψ_0(x), …, ψ_{n-1}(x)`, orthonormal on ℝ:
/// `ψ_k(x) = P_k(x) e^{-x^2/4}` with `P_k` orthonormal for `e^{-x^2/2} dx`.
///
/// The recurrence `ψ_{k+1} = (x ψ_k - sqrt(k) ψ_{k-1}) / sqrt(k+1)` runs on
/// mantissas with a separately tracked exponent, so neither the Gaussian
/// factor nor the polynomial growth overflows or underflows prematurely.
pub fn oscillator_wavefunctions(n: usize, x: f64) -> Vec<f64> {
    const RESCALE: f64 = 1e100;
    let log_rescale = RESCALE.ln();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let mut log_scale = -0.25 * x * x;
    let mut prev = 0.0;
    let mut cur = (2.0 * PI).powf(-0.25);
    out.push(cur * log_scale.exp());
    for k in 0..n - 1 {
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += log_rescale;
        }
        out.push(cur * log_scale.exp());
    }
    out
}

/// Gaudin-Mehta kernel `K_n(x, y) = sqrt(n) Σ_{k<n} ψ_k(sqrt(n) x) ψ_k(sqrt(n) y)`
/// for the Wigner-normalized GUE (spectrum filling `[-2, 2]`).
pub fn gue_kernel(n: usize, x: f64, y: f64) -> f64 {
    let s = (n as f64).sqrt();
    let a = oscillator_wavefunctions(n, s * x);
    if x == y {
        return s * a.iter().map(|v| v * v).sum::<f64>();
    }
    let b = oscillator_wavefunctions(n, s * y);
    s * a.iter().zip(&b).map(|(p, q)| p * q).sum::<f64>()
}

/// `K_n` rescaled to unit mean spacing around `u`.
pub fn gue_kernel_normalized(n: usize, u: BulkEnergy, t: f64, tp: f64) -> f64 {
    let scale = n as f64 * u.density();
    gue_kernel(n, u.value() + t / scale, u.value() + tp / scale) / scale
}

/// `max |K_{n,u}(t, t') - K_Dyson(t, t')|` over a `grid x grid` lattice on
/// `[-half_width, half_width]^2`.
pub fn kernel_sup_distance(n: usize, u: BulkEnergy, half_width: f64, grid: usize) -> f64 {
    let scale = n as f64 * u.density();
    let s = (n as f64).sqrt();
    let ts: Vec<f64> = (0..grid)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (grid - 1).max(1) as f64)
        .collect();
    let psi: Vec<Vec<f64>> = ts
        .iter()
        .map(|t| oscillator_wavefunctions(n, s * (u.value() + t / scale)))
        .collect();
    let mut worst: f64 = 0.0;
    for (i, ti) in ts.iter().enumerate() {
        for (j, tj) in ts.iter().enumerate() {
            let k: f64 = psi[i].iter().zip(&psi[j]).map(|(a, b)| a * b).sum::<f64>() * s / scale;
            worst = worst.max((k - k_dyson(*ti, *tj)).abs());
        }
    }
    worst
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Symmetric, compactly supported test function of `arity` variables.
///
/// The support box is `[lo, hi]^arity`; evaluation returns 0 outside it.
#[derive(Clone)]
pub struct TestFunction {
    id: String,
    arity: usize,
    support: (f64, f64),
    smooth: bool,
    eval: Evaluator,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("id", &self.id)
            .field("arity", &self.arity)
            .field("support", &self.support)
            .field("smooth", &self.smooth)
            .finish()
    }
}

/// `exp(-1/(1 - t^2))` on `(-1, 1)`, zero elsewhere.
pub fn bump(t: f64) -> f64 {
    let r = 1.0 - t * t;
    if r <= 0.0 {
        0.0
    } else {
        (-1.0 / r).exp()
    }
}

impl TestFunction {
    pub fn new<F>(id: impl Into<String>, arity: usize, support: (f64, f64), smooth: bool, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            arity,
            support,
            smooth,
            eval: Arc::new(f),
        }
    }

    pub fn zero(arity: usize) -> Self {
        Self::new("zero", arity, (0.0, 0.0), true, |_| 0.0)
    }

    /// Indicator of `[-half, half]^arity`. Not continuous; used for counting
    /// checks only.
    pub fn indicator(arity: usize, half: f64) -> Self {
        Self::new(format!("one:{half}"), arity, (-half, half), false, |_| 1.0)
    }

    /// `Π_i b((t_i - center)/half_width)`.
    pub fn bump_product(arity: usize, center: f64, half_width: f64) -> Self {
        let id = if center == 0.0 && half_width == 1.0 {
            format!("bump{arity}")
        } else {
            format!("bump{arity}:c={center},w={half_width}")
        };
        Self::new(
            id,
            arity,
            (center - half_width, center + half_width),
            true,
            move |t| t.iter().map(|x| bump((x - center) / half_width)).product(),
        )
    }

    /// `(b_1(t_1) b_2(t_2) + b_1(t_2) b_2(t_1)) / 2` for bumps of half-width
    /// `w` at `c1` and `c2`.
    pub fn symmetrized_pair(c1: f64, c2: f64, w: f64) -> Self {
        let lo = c1.min(c2) - w;
        let hi = c1.max(c2) + w;
        Self::new(format!("pair:c1={c1},c2={c2},w={w}"), 2, (lo, hi), true, move |t| {
            let b = |x: f64, c: f64| bump((x - c) / w);
            0.5 * (b(t[0], c1) * b(t[1], c2) + b(t[1], c1) * b(t[0], c2))
        })
    }

    /// Built-in test functions by identifier:
    /// `zero`, `one:<half>`, `bump<k>`, `bump<k>:c=<c>,w=<w>`,
    /// `pair:c1=<a>,c2=<b>,w=<w>`. The arity of `zero` and `one` is `k`.
    pub fn parse(id: &str, k: usize) -> Result<Self> {
        let bad = || Error::UnknownTestFunction(id.to_string());
        let kv = |s: &str| -> Result<std::collections::HashMap<String, f64>> {
            s.split(',')
                .map(|p| {
                    let (a, b) = p.split_once('=').ok_or_else(bad)?;
                    Ok((a.trim().to_string(), b.trim().parse::<f64>().map_err(|_| bad())?))
                })
                .collect()
        };
        if id == "zero" {
            return Ok(Self::zero(k));
        }
        if let Some(h) = id.strip_prefix("one:") {
            return Ok(Self::indicator(k, h.parse().map_err(|_| bad())?));
        }
        if let Some(rest) = id.strip_prefix("pair:") {
            let m = kv(rest)?;
            let get = |name: &str| m.get(name).copied().ok_or_else(bad);
            return Ok(Self::symmetrized_pair(get("c1")?, get("c2")?, get("w")?));
        }
        if let Some(rest) = id.strip_prefix("bump") {
            let (arity, params) = match rest.split_once(':') {
                Some((a, p)) => (a, Some(p)),
                None => (rest, None),
            };
            let arity: usize = arity.parse().map_err(|_| bad())?;
            if arity == 0 || arity > 4 {
                return Err(bad());
            }
            let (c, w) = match params {
                Some(p) => {
                    let m = kv(p)?;
                    (
                        m.get("c").copied().unwrap_or(0.0),
                        m.get("w").copied().unwrap_or(1.0),
                    )
                }
                None => (0.0, 1.0),
            };
            if !(w > 0.0) {
                return Err(bad());
            }
            return Ok(Self::bump_product(arity, c, w));
        }
        Err(bad())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn is_identically_zero(&self) -> bool {
        self.support.0 >= self.support.1
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.support.0 && x <= self.support.1
    }

    pub fn evaluate(&self, t: &[f64]) -> f64 {
        if t.len() != self.arity || !t.iter().all(|&x| self.contains(x)) {
            return 0.0;
        }
        (self.eval)(t)
    }
}

/// Tolerance between successive refinement levels of [`dyson_target`].
pub const TARGET_TOL: f64 = 1e-8;

/// `∫ F ρ_Dyson^{(k)}` over the support box of `F`.
///
/// Composite Gauss-Legendre in each coordinate, doubling the panel count
/// until two successive levels agree to [`TARGET_TOL`].
pub fn dyson_target(f: &TestFunction) -> f64 {
    if f.is_identically_zero() {
        return 0.0;
    }
    let k = f.arity();
    let (lo, hi) = f.support();
    let max_level = match k {
        1 => 12,
        2 => 7,
        3 => 5,
        _ => 3,
    };
    let integrand = |t: &[f64]| f.evaluate(t) * rho_dyson(t);
    let mut prev = f64::NAN;
    let mut value = 0.0;
    for level in 1..=max_level {
        let rule = composite(lo, hi, 1 << level, 10);
        value = integrate_cube(&rule, k, integrand);
        if (value - prev).abs() < TARGET_TOL {
            break;
        }
        prev = value;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use proptest::prelude::*;

    #[test]
    fn semicircle_values() {
        assert!((rho_sc(0.0) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(rho_sc(2.0), 0.0);
        assert_eq!(rho_sc(-2.0), 0.0);
        assert_eq!(rho_sc(3.0), 0.0);
        let mass = GaussLegendre::on_interval(200, -2.0, 2.0).integrate(rho_sc);
        // square-root endpoints cap plain Gauss-Legendre at ~6.5e-8 here
        assert!((mass - 1.0).abs() < 1e-7, "{mass}");
    }

    #[test]
    fn semicircle_mass_with_endpoint_substitution() {
        // x = 2 sin θ removes the square-root endpoints: ∫ (2/π) cos^2 θ dθ
        let mass = GaussLegendre::on_interval(200, -PI / 2.0, PI / 2.0)
            .integrate(|th| rho_sc(2.0 * th.sin()) * 2.0 * th.cos());
        assert!((mass - 1.0).abs() < 1e-10);
        assert!((semicircle_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((semicircle_cdf(2.0) - 1.0).abs() < 1e-15);
        let partial = GaussLegendre::on_interval(200, -PI / 2.0, (0.5f64).asin())
            .integrate(|th| rho_sc(2.0 * th.sin()) * 2.0 * th.cos());
        assert!((semicircle_cdf(1.0) - partial).abs() < 1e-10);
    }

    #[test]
    fn bulk_energy_guard() {
        assert!(BulkEnergy::new(1.99).is_ok());
        assert!(BulkEnergy::new(2.0).is_err());
        assert!(BulkEnergy::with_margin(1.95, 0.1).is_err());
        assert!(BulkEnergy::with_margin(-1.9, 0.1).is_ok());
    }

    #[test]
    fn sine_kernel_values() {
        assert_eq!(k_dyson(0.3, 0.3), 1.0);
        assert!(k_dyson(0.0, 1.0).abs() < 1e-15);
        assert!((k_dyson(0.0, 0.5) - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn sine_kernel_is_continuous_at_diagonal() {
        for h in [1e-4, 3e-5, 1e-6, 9e-7, 1e-8, -5e-7, -1e-4] {
            let approx = 1.0 - (PI * h).powi(2) / 6.0;
            assert!((k_dyson(1.0, 1.0 + h) - approx).abs() <= 1e-9, "h={h}");
        }
    }

    #[test]
    fn dyson_correlation_examples() {
        assert_eq!(rho_dyson(&[0.7]), 1.0);
        assert!((rho_dyson(&[0.0, 0.5]) - (1.0 - (2.0 / PI).powi(2))).abs() < 1e-15);
        assert_eq!(rho_dyson(&[0.2, 0.2]), 0.0);
        assert!(rho_dyson(&[0.1, 0.9, 0.1]).abs() < 1e-15);
    }

    #[test]
    fn determinant_matches_cofactor_expansion() {
        let m = vec![2.0, -1.0, 0.5, 1.0, 3.0, -2.0, 0.0, 4.0, 1.0];
        let cof = 2.0 * (3.0 * 1.0 - (-2.0) * 4.0) + (1.0 * 1.0 - (-2.0) * 0.0)
            + 0.5 * (1.0 * 4.0 - 3.0 * 0.0);
        assert!((determinant(m, 3) - cof).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn dyson_correlations_are_bounded_and_symmetric(
            pts in proptest::collection::vec(-4.0f64..4.0, 1..=4),
            rot in 0usize..4,
        ) {
            let r = rho_dyson(&pts);
            prop_assert!(r >= -1e-12);
            prop_assert!(r <= 1.0 + 1e-12);
            let mut perm = pts.clone();
            perm.rotate_left(rot % pts.len());
            prop_assert!((rho_dyson(&perm) - r).abs() < 1e-12);
        }

        #[test]
        fn gue_kernel_is_symmetric(x in -1.5f64..1.5, y in -1.5f64..1.5, n in 1usize..60) {
            prop_assert!((gue_kernel(n, x, y) - gue_kernel(n, y, x)).abs() < 1e-13);
        }
    }

    #[test]
    fn gue_kernel_single_term() {
        assert!((gue_kernel(1, 0.0, 0.0) - (2.0 * PI).powf(-0.5)).abs() < 1e-15);
        assert!((gue_kernel(1, 0.0, 0.0) - 0.3989423).abs() < 1e-7);
    }

    #[test]
    fn gue_kernel_trace_is_n() {
        let n = 20;
        let rule = GaussLegendre::on_interval(400, -3.0, 3.0);
        let tr = rule.integrate(|x| gue_kernel(n, x, x)) / n as f64;
        assert!((tr - 1.0).abs() < 1e-6, "{tr}");
    }

    #[test]
    fn wavefunctions_are_orthonormal() {
        // Gauss-Legendre on a wide window stands in for the real line.
        let n = 30;
        let rule = GaussLegendre::on_interval(300, -14.0, 14.0);
        let table: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| oscillator_wavefunctions(n, x)).collect();
        for i in 0..n {
            for j in 0..n {
                let ip: f64 = table.iter().zip(&rule.weights).map(|(p, w)| w * p[i] * p[j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-10, "({i},{j}): {ip}");
            }
        }
    }

    #[test]
    fn wavefunction_recurrence_stays_finite() {
        for x in [-40.0, -25.0, 0.0, 13.3, 39.9, 40.0] {
            let psi = oscillator_wavefunctions(1000, x);
            assert!(psi.iter().all(|v| v.is_finite()), "x={x}");
            // Cramér: |ψ_k| <= (2π)^{-1/4} ≈ 0.63
            assert!(psi.iter().all(|v| v.abs() < 1.0));
        }
        // deep outside the oscillatory region the functions are negligible, not NaN
        let far = oscillator_wavefunctions(100, 60.0);
        assert!(far.iter().all(|v| v.is_finite() && v.abs() < 1e-100));
    }

    #[test]
    fn diagonal_reproduces_semicircle() {
        let n = 400;
        for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let d = gue_kernel(n, x, x) / n as f64;
            assert!((d - rho_sc(x)).abs() < 0.02, "x={x}: {d}");
        }
    }

    #[test]
    fn normalized_kernel_converges_to_sine_kernel() {
        let u = BulkEnergy::new(0.0).unwrap();
        assert!((gue_kernel_normalized(200, u, 0.0, 0.0) - 1.0).abs() < 0.05);
        let d: Vec<f64> = [50, 100, 200]
            .iter()
            .map(|&n| kernel_sup_distance(n, u, 3.0, 41))
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
        // coincident points give a vanishing 2x2 determinant
        let k = |a, b| gue_kernel_normalized(200, u, a, b);
        let det = k(0.4, 0.4) * k(0.4, 0.4) - k(0.4, 0.4) * k(0.4, 0.4);
        assert_eq!(det, 0.0);
        let m = vec![k(0.4, 0.4), k(0.4, 0.4), k(0.4, 0.4), k(0.4, 0.4)];
        assert!(determinant(m, 2).abs() < 1e-15);
    }

    #[test]
    fn test_function_parsing_and_support() {
        let f = TestFunction::parse("bump1", 1).unwrap();
        assert_eq!(f.arity(), 1);
        assert_eq!(f.support(), (-1.0, 1.0));
        assert_eq!(f.evaluate(&[1.5]), 0.0);
        assert!((f.evaluate(&[0.0]) - (-1f64).exp()).abs() < 1e-15);
        let g = TestFunction::parse("bump2:c=0.5,w=2", 2).unwrap();
        assert_eq!(g.support(), (-1.5, 2.5));
        let p = TestFunction::parse("pair:c1=0,c2=1,w=0.75", 2).unwrap();
        assert!((p.evaluate(&[0.1, 0.9]) - p.evaluate(&[0.9, 0.1])).abs() < 1e-15);
        assert!(TestFunction::parse("bump0", 0).is_err());
        assert!(TestFunction::parse("gauss", 1).is_err());
        assert!(TestFunction::parse("zero", 3).unwrap().is_identically_zero());
    }

    #[test]
    fn targets() {
        assert_eq!(dyson_target(&TestFunction::zero(2)), 0.0);
        // k = 1: ρ ≡ 1, so the target is ∫ b = 0.4439938161680794 (the
        // standard bump integral), checked against a dense plain rule
        let f = TestFunction::bump_product(1, 0.0, 1.0);
        let dense = crate::quadrature::composite(-1.0, 1.0, 4096, 8).integrate(bump);
        assert!((dyson_target(&f) - dense).abs() < 1e-9);
        assert!((dense - 0.443_993_816_168_079_4).abs() < 1e-12);
        // k = 2 target is below the product of the marginals (repulsion)
        let g = TestFunction::bump_product(2, 0.0, 1.0);
        let t2 = dyson_target(&g);
        assert!(t2 > 0.0 && t2 < dense * dense);
    }
}
