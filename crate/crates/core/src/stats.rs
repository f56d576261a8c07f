//! Monte Carlo estimators over spectrum batches.
//!
//! Everything here is local to a bulk energy `u` and measured in units of the
//! mean spacing `1/(n ρ_sc(u))`. Uncertainties resample whole samples, never
//! single eigenvalues, since eigenvalues of one matrix are dependent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fredholm::PoissonBinomial;
use crate::kernels::{dyson_target, semicircle_cdf, BulkEnergy, TestFunction};
use crate::spectra::{Spectrum, SpectrumBatch};

/// Estimators refuse energies with `|u| > 2 - BULK_MARGIN`.
pub const BULK_MARGIN: f64 = 0.1;
pub const MAX_CORRELATION_ORDER: usize = 4;
pub const MAX_COUNTING_MOMENT: usize = 4;

/// Nonparametric bootstrap over samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Self {
            resamples: 400,
            seed: 0x5EED_B007,
        }
    }
}

impl Bootstrap {
    /// Standard deviation of the resampled means of `x`.
    pub fn stderr(&self, x: &[f64]) -> f64 {
        let m = x.len();
        if m < 2 || self.resamples < 2 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let means: Vec<f64> = (0..self.resamples)
            .map(|_| (0..m).map(|_| x[rng.gen_range(0..m)]).sum::<f64>() / m as f64)
            .collect();
        let mu = means.iter().sum::<f64>() / means.len() as f64;
        let var = means.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        var.sqrt()
    }
}

fn guard(u: BulkEnergy) -> Result<()> {
    BulkEnergy::with_margin(u.value(), BULK_MARGIN).map(|_| ())
}

/// `(value - target) / stderr`, with the degenerate `stderr = 0` case mapped
/// to 0 on exact agreement and to a signed infinity otherwise.
fn z_score(value: f64, target: f64, stderr: f64) -> f64 {
    let d = value - target;
    if stderr > 0.0 {
        d / stderr
    } else if d == 0.0 {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

/// Local coordinates `t_i = n ρ_sc(u) (λ_i - u)`.
pub fn rescale(spectrum: &Spectrum, u: BulkEnergy) -> Vec<f64> {
    let scale = spectrum.n() as f64 * u.density();
    spectrum
        .eigenvalues
        .iter()
        .map(|&x| scale * (x - u.value()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub k: usize,
    pub u: f64,
    pub test_function: String,
    /// `∫ F ρ_Dyson^{(k)}`.
    pub target: f64,
    pub z: f64,
}

/// Sum of `F` over ordered `k`-tuples of distinct points, using the
/// symmetry of `F`: `k! Σ_{i_1 < … < i_k} F`.
fn ordered_tuple_sum(points: &[f64], k: usize, f: &TestFunction) -> f64 {
    fn walk(points: &[f64], start: usize, buf: &mut Vec<f64>, k: usize, f: &TestFunction) -> f64 {
        if buf.len() == k {
            return f.evaluate(buf);
        }
        let mut acc = 0.0;
        for i in start..points.len() {
            if points.len() - i < k - buf.len() {
                break;
            }
            buf.push(points[i]);
            acc += walk(points, i + 1, buf, k, f);
            buf.pop();
        }
        acc
    }
    let factorial: f64 = (1..=k).map(|j| j as f64).product();
    factorial * walk(points, 0, &mut Vec::with_capacity(k), k, f)
}

/// Rescaled points of one sample inside the support of `f`.
fn local_points(spectrum: &Spectrum, u: BulkEnergy, f: &TestFunction) -> Vec<f64> {
    let scale = spectrum.n() as f64 * u.density();
    let (lo, hi) = f.support();
    let ev = &spectrum.eigenvalues;
    let a = ev.partition_point(|&x| scale * (x - u.value()) < lo);
    let b = ev.partition_point(|&x| scale * (x - u.value()) <= hi);
    ev[a..b].iter().map(|&x| scale * (x - u.value())).collect()
}

fn check_arity(k: usize, f: &TestFunction) -> Result<()> {
    if f.arity() != k {
        return Err(Error::ArityMismatch {
            expected: k,
            found: f.arity(),
        });
    }
    if k == 0 || k > MAX_CORRELATION_ORDER {
        return Err(Error::InvalidArgument(format!(
            "correlation order must be in 1..={MAX_CORRELATION_ORDER}, got {k}"
        )));
    }
    Ok(())
}

fn estimate(
    per_sample: &[f64],
    k: usize,
    u: f64,
    f: &TestFunction,
    boot: &Bootstrap,
) -> CorrelationEstimate {
    let value = per_sample.iter().sum::<f64>() / per_sample.len() as f64;
    let stderr = boot.stderr(per_sample);
    let target = dyson_target(f);
    CorrelationEstimate {
        value,
        stderr,
        samples: per_sample.len(),
        k,
        u,
        test_function: f.id().to_string(),
        target,
        z: z_score(value, target, stderr),
    }
}

/// Monte Carlo estimate of `∫ F ρ_{n,u}^{(k)}` with the default bootstrap.
pub fn correlation_statistic(
    batch: &SpectrumBatch,
    u: BulkEnergy,
    k: usize,
    f: &TestFunction,
) -> Result<CorrelationEstimate> {
    correlation_statistic_with(batch, u, k, f, &Bootstrap::default())
}

pub fn correlation_statistic_with(
    batch: &SpectrumBatch,
    u: BulkEnergy,
    k: usize,
    f: &TestFunction,
    boot: &Bootstrap,
) -> Result<CorrelationEstimate> {
    check_arity(k, f)?;
    guard(u)?;
    let per_sample: Vec<f64> = batch
        .spectra
        .iter()
        .map(|s| ordered_tuple_sum(&local_points(s, u, f), k, f))
        .collect();
    Ok(estimate(&per_sample, k, u.value(), f, boot))
}

/// Same statistic averaged over the midpoint grid
/// `u - b + (i + 1/2) 2b/grid`, `i < grid`.
pub fn averaged_correlation_statistic(
    batch: &SpectrumBatch,
    u: BulkEnergy,
    half_width: f64,
    grid: usize,
    k: usize,
    f: &TestFunction,
) -> Result<CorrelationEstimate> {
    averaged_correlation_statistic_with(batch, u, half_width, grid, k, f, &Bootstrap::default())
}

pub fn averaged_correlation_statistic_with(
    batch: &SpectrumBatch,
    u: BulkEnergy,
    half_width: f64,
    grid: usize,
    k: usize,
    f: &TestFunction,
    boot: &Bootstrap,
) -> Result<CorrelationEstimate> {
    check_arity(k, f)?;
    if grid == 0 || !(half_width >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "averaging needs grid >= 1 and b >= 0, got grid = {grid}, b = {half_width}"
        )));
    }
    let energies = (0..grid)
        .map(|i| {
            let v = u.value() - half_width + (i as f64 + 0.5) * 2.0 * half_width / grid as f64;
            BulkEnergy::with_margin(v, BULK_MARGIN)
        })
        .collect::<Result<Vec<_>>>()?;
    BulkEnergy::with_margin(u.value() - half_width, BULK_MARGIN)?;
    BulkEnergy::with_margin(u.value() + half_width, BULK_MARGIN)?;
    let per_sample: Vec<f64> = batch
        .spectra
        .iter()
        .map(|s| {
            energies
                .iter()
                .map(|&e| ordered_tuple_sum(&local_points(s, e, f), k, f))
                .sum::<f64>()
                / grid as f64
        })
        .collect();
    Ok(estimate(&per_sample, k, u.value(), f, boot))
}

/// Per-sample eigenvalue counts in `[u, u + K/(n ρ_sc(u)))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingHistogram {
    pub u: f64,
    pub length: f64,
    pub samples: usize,
    /// `tally[c]` samples had exactly `c` eigenvalues in the interval.
    pub tally: Vec<usize>,
    pub pmf: Vec<f64>,
    pub mean: f64,
    /// `moments[j - 1] = E N^j`, `j = 1..=4`.
    pub moments: [f64; MAX_COUNTING_MOMENT],
}

impl CountingHistogram {
    pub fn prob(&self, c: usize) -> f64 {
        self.pmf.get(c).copied().unwrap_or(0.0)
    }

    pub fn tv_to_law(&self, law: &PoissonBinomial) -> f64 {
        tv_distance(&self.pmf, &law.pmf)
    }

    pub fn tv_to(&self, other: &CountingHistogram) -> f64 {
        tv_distance(&self.pmf, &other.pmf)
    }
}

/// `(1/2) Σ |p_c - q_c|` with missing entries treated as 0.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let get = |v: &[f64], c: usize| v.get(c).copied().unwrap_or(0.0);
    let tv = 0.5 * (0..len).map(|c| (get(p, c) - get(q, c)).abs()).sum::<f64>();
    tv.clamp(0.0, 1.0)
}

fn interval(batch: &SpectrumBatch, u: BulkEnergy, length: f64) -> Result<(f64, f64)> {
    guard(u)?;
    if !(length > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "interval length must be positive, got {length}"
        )));
    }
    let hi = u.value() + length / (batch.n() as f64 * u.density());
    Ok((u.value(), hi))
}

pub fn counting_histogram(
    batch: &SpectrumBatch,
    u: BulkEnergy,
    length: f64,
) -> Result<CountingHistogram> {
    let (lo, hi) = interval(batch, u, length)?;
    let mut tally: Vec<usize> = Vec::new();
    for s in &batch.spectra {
        let c = s.count_in(lo, hi);
        if c >= tally.len() {
            tally.resize(c + 1, 0);
        }
        tally[c] += 1;
    }
    let m = batch.len();
    let pmf: Vec<f64> = tally.iter().map(|&t| t as f64 / m as f64).collect();
    let mut moments = [0.0; MAX_COUNTING_MOMENT];
    for (j, slot) in moments.iter_mut().enumerate() {
        *slot = tally
            .iter()
            .enumerate()
            .map(|(c, &t)| (c as f64).powi(j as i32 + 1) * t as f64)
            .sum::<f64>()
            / m as f64;
    }
    Ok(CountingHistogram {
        u: u.value(),
        length,
        samples: m,
        mean: moments[0],
        tally,
        pmf,
        moments,
    })
}

/// `E N^k` and `E binom(N, k)` with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingMoment {
    pub k: usize,
    pub raw: f64,
    pub raw_stderr: f64,
    pub binomial: f64,
    pub binomial_stderr: f64,
}

fn binomial(c: usize, k: usize) -> f64 {
    if k > c {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (c - i) as f64 / (i + 1) as f64)
}

pub fn counting_moments(hist: &CountingHistogram, k: usize) -> Result<CountingMoment> {
    if k == 0 || k > MAX_COUNTING_MOMENT {
        return Err(Error::InvalidArgument(format!(
            "counting moments are available for k in 1..={MAX_COUNTING_MOMENT}, got {k}"
        )));
    }
    let m = hist.samples as f64;
    let mean_and_se = |g: &dyn Fn(usize) -> f64| {
        let mu = hist.tally.iter().enumerate().map(|(c, &t)| g(c) * t as f64).sum::<f64>() / m;
        let var = if hist.samples > 1 {
            hist.tally
                .iter()
                .enumerate()
                .map(|(c, &t)| (g(c) - mu).powi(2) * t as f64)
                .sum::<f64>()
                / (m - 1.0)
        } else {
            0.0
        };
        (mu, (var / m).sqrt())
    };
    let (raw, raw_stderr) = mean_and_se(&|c| (c as f64).powi(k as i32));
    let (binomial, binomial_stderr) = mean_and_se(&|c| binomial(c, k));
    Ok(CountingMoment {
        k,
        raw,
        raw_stderr,
        binomial,
        binomial_stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapFrequency {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Fraction of samples with no eigenvalue in the counting interval.
pub fn gap_frequency(batch: &SpectrumBatch, u: BulkEnergy, length: f64) -> Result<GapFrequency> {
    let (lo, hi) = interval(batch, u, length)?;
    let empty = batch.spectra.iter().filter(|s| s.count_in(lo, hi) == 0).count();
    let m = batch.len();
    let value = empty as f64 / m as f64;
    Ok(GapFrequency {
        value,
        stderr: (value * (1.0 - value) / m as f64).sqrt(),
        samples: m,
    })
}

/// One named comparison of a measured value against a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="`, `"<"` or `">="`.
    pub relation: &'static str,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, relation: &'static str, bound: f64, passed: bool) -> Self {
        Self {
            name: name.into(),
            value,
            relation,
            bound,
            passed,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value, "<=", bound, value <= bound)
    }

    pub fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value, "<", bound, value < bound)
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(name, value, ">=", bound, value >= bound)
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {:.6e} {} {:.6e}",
            if self.passed { "ok  " } else { "FAIL" },
            self.name,
            self.value,
            self.relation,
            self.bound
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ComparisonReport {
    pub tv: Option<f64>,
    pub ks: Option<f64>,
    pub z_scores: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Kolmogorov-Smirnov distance between sorted `x` and a continuous CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub const DEFAULT_KS_TOL: f64 = 0.02;

/// Pooled eigenvalues against the semicircle CDF.
pub fn semicircle_test(batch: &SpectrumBatch, ks_tol: f64) -> ComparisonReport {
    let ks = ks_statistic(&batch.pooled(), semicircle_cdf);
    ComparisonReport {
        ks: Some(ks),
        checks: vec![Check::at_most("ks", ks, ks_tol)],
        ..Default::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rigidity {
    pub u: f64,
    pub epsilon: f64,
    /// `n ∫_{-2}^u ρ_sc`.
    pub expected: f64,
    /// `n^ε`.
    pub allowance: f64,
    pub max_deviation: f64,
    pub fraction: f64,
}

/// Fraction of samples with `|N_{[-2,u]} - n ∫_{-2}^u ρ_sc| <= n^ε`.
pub fn rigidity_check(batch: &SpectrumBatch, u: f64, epsilon: f64) -> Result<Rigidity> {
    if !(-2.0..=2.0).contains(&u) {
        return Err(Error::OutsideBulk(u));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let n = batch.n() as f64;
    let expected = n * semicircle_cdf(u);
    let allowance = n.powf(epsilon);
    let mut max_deviation: f64 = 0.0;
    let mut ok = 0usize;
    for s in &batch.spectra {
        let dev = (s.count_in_closed(-2.0, u) as f64 - expected).abs();
        max_deviation = max_deviation.max(dev);
        if dev <= allowance {
            ok += 1;
        }
    }
    Ok(Rigidity {
        u,
        epsilon,
        expected,
        allowance,
        max_deviation,
        fraction: ok as f64 / batch.len() as f64,
    })
}

/// Tolerances for [`compare_ensembles`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareTolerance {
    pub tv: f64,
    pub z: f64,
}

impl Default for CompareTolerance {
    fn default() -> Self {
        Self { tv: 0.04, z: 3.0 }
    }
}

/// Counting-law TV distance and a two-sample z-test on a shared
/// correlation statistic.
pub fn compare_ensembles(
    a: &SpectrumBatch,
    b: &SpectrumBatch,
    u: BulkEnergy,
    length: f64,
    f: &TestFunction,
    tol: &CompareTolerance,
) -> Result<ComparisonReport> {
    let mut warnings = Vec::new();
    if a.n() != b.n() {
        warnings.push(format!("batches have different sizes: n = {} and n = {}", a.n(), b.n()));
    }
    let tv = counting_histogram(a, u, length)?.tv_to(&counting_histogram(b, u, length)?);
    let k = f.arity();
    let ea = correlation_statistic(a, u, k, f)?;
    let eb = correlation_statistic(b, u, k, f)?;
    let z = z_score(ea.value, eb.value, ea.stderr.hypot(eb.stderr));
    Ok(ComparisonReport {
        tv: Some(tv),
        ks: None,
        z_scores: vec![(f.id().to_string(), z)],
        checks: vec![
            Check::at_most("tv", tv, tol.tv),
            Check::at_most(format!("|z| {}", f.id()), z.abs(), tol.z),
        ],
        warnings,
    })
}
