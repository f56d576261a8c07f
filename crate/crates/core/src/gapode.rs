//! Gap probability from the Jimbo-Miwa-Mori-Sato equation
//!
//! ```text
//! (K f'')^2 + 4 (K f' - f) (K f' - f + f'^2) = 0,
//! f(K) = -K/π - K^2/π^2 - K^3/π^3 + O(K^4)   (K -> 0),
//! E(K) = exp(∫_0^K f(x)/x dx).
//! ```
//!
//! The equation is quadratic in `f''`; we integrate
//! `f'' = σ (2/K) sqrt(-(K f' - f)(K f' - f + f'^2))` with `σ = -1` from the
//! series (near zero `K f'' ≈ -2K/π^2`), flipping `σ` only if the radicand
//! touches zero. Integration starts at a small `K0` from the cubic series and
//! uses classical RK4 with a fixed step in `ln K`, which resolves the `1/K`
//! scale near the start without wasting steps further out. `∫ f/x` is carried
//! as a third state variable; its `(0, K0]` part comes from the series.
//!
//! The ODE variable is not necessarily measured in mean spacings: the
//! solution is compared against `det(1 - T)` on `[0, sK]` for a few
//! candidate scalings `s` and the best one is recorded.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_K0: f64 = 1e-3;
pub const DEFAULT_STEPS: usize = 4000;
pub const DEFAULT_K_MAX: f64 = 2.0;
pub const MAX_K: f64 = 5.0;

/// Radicands below this are reported as a branch failure.
pub const RADICAND_FLOOR: f64 = -1e-10;

/// Probe lengths used by [`calibrate_scaling`].
pub const CALIBRATION_PROBES: [f64; 4] = [0.5, 1.0, 1.5, 2.0];
/// Candidate reparametrizations of the ODE variable.
pub const CANDIDATE_SCALES: [f64; 3] = [1.0 / PI, 1.0, PI];
/// A calibrated solution must agree with the Fredholm route to this level.
pub const CALIBRATION_TOL: f64 = 1e-2;

/// Cubic small-`K` series `(f, f')`.
pub fn series(k: f64) -> (f64, f64) {
    let a = k / PI;
    (
        -a - a * a - a * a * a,
        -(1.0 + 2.0 * a + 3.0 * a * a) / PI,
    )
}

/// `∫_0^K f(x)/x dx` from the cubic series.
pub fn series_integral(k: f64) -> f64 {
    let a = k / PI;
    -a - a * a / 2.0 - a * a * a / 3.0
}

fn radicand(k: f64, f: f64, fp: f64) -> f64 {
    let a = k * fp - f;
    -a * (a + fp * fp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSolution {
    pub k: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    /// `∫_0^K f(x)/x dx`.
    pub integral: Vec<f64>,
    /// `E(K) = exp(integral)`.
    pub gap: Vec<f64>,
    /// Scaling chosen by [`calibrate_scaling`]: `E(K) ≈ det(1 - T_{sK})`.
    pub scale: Option<f64>,
    /// Smallest radicand met along the trajectory.
    pub min_radicand: f64,
}

impl GapSolution {
    pub fn k0(&self) -> f64 {
        self.k[0]
    }

    pub fn k_max(&self) -> f64 {
        *self.k.last().expect("nonempty grid")
    }

    /// Locates the grid step containing `k` and returns Hermite
    /// interpolation of `(value, derivative)` pairs.
    fn interpolate(&self, k: f64, value: &[f64], deriv: impl Fn(usize) -> f64) -> Option<f64> {
        if !(k >= self.k0() && k <= self.k_max()) {
            return None;
        }
        let i = self.k.partition_point(|&x| x <= k).clamp(1, self.k.len() - 1) - 1;
        let (x0, x1) = (self.k[i], self.k[i + 1]);
        let h = x1 - x0;
        let t = (k - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Some(h00 * value[i] + h10 * h * deriv(i) + h01 * value[i + 1] + h11 * h * deriv(i + 1))
    }

    /// `∫_0^K f/x`; the series covers `(0, K0)`.
    pub fn integral_at(&self, k: f64) -> Option<f64> {
        if k > 0.0 && k < self.k0() {
            return Some(series_integral(k));
        }
        self.interpolate(k, &self.integral, |i| self.f[i] / self.k[i])
    }

    /// Gap probability `E(K)`.
    pub fn gap_at(&self, k: f64) -> Option<f64> {
        if k == 0.0 {
            return Some(1.0);
        }
        self.integral_at(k).map(f64::exp)
    }

    pub fn f_at(&self, k: f64) -> Option<f64> {
        if k > 0.0 && k < self.k0() {
            return Some(series(k).0);
        }
        self.interpolate(k, &self.f, |i| self.fp[i])
    }
}

/// Integrates from `k0` to `k_max` with `steps` RK4 steps uniform in `ln K`.
pub fn solve_jmms(k_max: f64, k0: f64, steps: usize) -> Result<GapSolution> {
    if !(k0 > 0.0) || !(k0 < k_max) || k0 > 0.1 {
        return Err(Error::InvalidArgument(format!(
            "need 0 < K0 <= 0.1 and K0 < K_max, got K0 = {k0}, K_max = {k_max}"
        )));
    }
    if k_max > MAX_K {
        return Err(Error::InvalidArgument(format!(
            "K_max = {k_max} exceeds the supported range (<= {MAX_K})"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }

    let (f0, fp0) = series(k0);
    let mut y = [f0, fp0, series_integral(k0)];
    let mut sign = -1.0;
    let mut min_radicand = radicand(k0, f0, fp0);

    // d/ds with s = ln K: K * (f', f'', f/K)
    let rhs = |s: f64, y: &[f64; 3], sign: f64| -> Result<[f64; 3]> {
        let k = s.exp();
        let r = radicand(k, y[0], y[1]);
        if r < RADICAND_FLOOR {
            return Err(Error::NegativeRadicand { k, radicand: r });
        }
        let fpp = sign * (2.0 / k) * r.max(0.0).sqrt();
        Ok([k * y[1], k * fpp, y[0]])
    };

    let s0 = k0.ln();
    let h = (k_max.ln() - s0) / steps as f64;
    let mut sol = GapSolution {
        k: Vec::with_capacity(steps + 1),
        f: Vec::with_capacity(steps + 1),
        fp: Vec::with_capacity(steps + 1),
        integral: Vec::with_capacity(steps + 1),
        gap: Vec::with_capacity(steps + 1),
        scale: None,
        min_radicand,
    };
    let push = |sol: &mut GapSolution, k: f64, y: &[f64; 3]| {
        sol.k.push(k);
        sol.f.push(y[0]);
        sol.fp.push(y[1]);
        sol.integral.push(y[2]);
        sol.gap.push(y[2].exp());
    };
    push(&mut sol, k0, &y);

    let axpy = |y: &[f64; 3], a: f64, d: &[f64; 3]| [y[0] + a * d[0], y[1] + a * d[1], y[2] + a * d[2]];
    let mut r_prev = min_radicand;
    let mut r_prev2 = f64::INFINITY;
    for step in 1..=steps {
        let s = s0 + (step - 1) as f64 * h;
        let k1 = rhs(s, &y, sign)?;
        let k2 = rhs(s + 0.5 * h, &axpy(&y, 0.5 * h, &k1), sign)?;
        let k3 = rhs(s + 0.5 * h, &axpy(&y, 0.5 * h, &k2), sign)?;
        let k4 = rhs(s + h, &axpy(&y, h, &k3), sign)?;
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let k = if step == steps { k_max } else { (s0 + step as f64 * h).exp() };
        let r = radicand(k, y[0], y[1]);
        if r < RADICAND_FLOOR {
            return Err(Error::NegativeRadicand { k, radicand: r });
        }
        // a radicand that touched zero and turned back up marks f'' crossing zero
        if r_prev < 1e-12 && r_prev <= r_prev2 && r > r_prev {
            sign = -sign;
        }
        r_prev2 = r_prev;
        r_prev = r;
        min_radicand = min_radicand.min(r);
        push(&mut sol, k, &y);
    }
    sol.min_radicand = min_radicand;
    Ok(sol)
}

/// Outcome of [`calibrate_scaling`].
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub scale: f64,
    /// `(s, max_K |E(K) - det(1 - T_{sK})|)` for every candidate.
    pub residuals: Vec<(f64, f64)>,
}

impl Calibration {
    pub fn best_residual(&self) -> f64 {
        self.residuals
            .iter()
            .find(|(s, _)| *s == self.scale)
            .map(|r| r.1)
            .expect("chosen scale is among the candidates")
    }
}

/// Picks `s ∈ {1/π, 1, π}` minimizing the worst disagreement between the
/// ODE gap probability and `det(1 - T)` on `[0, sK]` over the probe set,
/// and records it in `sol`.
pub fn calibrate_scaling<F>(sol: &mut GapSolution, mut oracle: F) -> Result<Calibration>
where
    F: FnMut(f64) -> Result<f64>,
{
    let needed = CALIBRATION_PROBES[CALIBRATION_PROBES.len() - 1];
    if sol.k_max() < needed - 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "calibration needs the solution up to K = {needed}, have {}",
            sol.k_max()
        )));
    }
    let mut residuals = Vec::with_capacity(CANDIDATE_SCALES.len());
    for &s in &CANDIDATE_SCALES {
        let mut worst: f64 = 0.0;
        for &k in &CALIBRATION_PROBES {
            let e = sol.gap_at(k).expect("probe within the grid");
            worst = worst.max((e - oracle(s * k)?).abs());
        }
        residuals.push((s, worst));
    }
    let &(scale, best) = residuals
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("three candidates");
    if !(best < CALIBRATION_TOL) {
        return Err(Error::Calibration {
            best_scale: scale,
            best_residual: best,
            tolerance: CALIBRATION_TOL,
        });
    }
    sol.scale = Some(scale);
    Ok(Calibration { scale, residuals })
}
