//! The acceptance suite behind `sinelab verify`.
//!
//! Each criterion produces a list of [`Check`]s and passes when all of them
//! do. Monte Carlo batches are drawn once per [`Context`] and shared
//! between criteria. The report contains no timings, so a fixed
//! configuration reproduces it byte for byte.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;
use sinelab_core::ensembles::{
    gauss_divisible, match_to_order, sample_stream, sample_wigner, three_point_match,
    AtomDistribution, EnsembleSpec, MomentMatchTolerance,
};
use sinelab_core::fredholm::{
    discretize, dyson_moment, elementary_symmetric_all, fredholm_det, fredholm_det_at,
    limiting_counting_law, operator_spectrum,
};
use sinelab_core::gapode::{calibrate_scaling, solve_jmms, DEFAULT_K0, DEFAULT_K_MAX, DEFAULT_STEPS};
use sinelab_core::kernels::{gue_kernel, kernel_sup_distance, rho_sc};
use sinelab_core::spectra::{batch_sample, eigenvalues, read_batch, write_batch};
use sinelab_core::stats::{
    correlation_statistic, counting_histogram, counting_moments, gap_frequency, rigidity_check,
    semicircle_test, Check,
};
use sinelab_core::{BulkEnergy, SpectrumBatch, TestFunction};

use crate::config::RunConfig;

/// Problem sizes of the Monte Carlo criteria.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scale {
    pub name: &'static str,
    pub counting_n: usize,
    pub counting_m: usize,
    pub semicircle_n: usize,
    pub semicircle_m: usize,
    pub conservation_n: usize,
    pub conservation_samples: usize,
    /// Multiplier on the distribution-distance tolerances (TV, KS); their
    /// sampling noise grows like `M^{-1/2}` when `M` shrinks.
    pub tolerance_factor: f64,
}

impl Scale {
    pub fn full() -> Self {
        Self {
            name: "full",
            counting_n: 200,
            counting_m: 4000,
            semicircle_n: 400,
            semicircle_m: 200,
            conservation_n: 100,
            conservation_samples: 100,
            tolerance_factor: 1.0,
        }
    }

    /// Reduced smoke variant; finishes well under a minute.
    pub fn quick() -> Self {
        Self {
            name: "quick",
            counting_n: 100,
            counting_m: 1000,
            semicircle_n: 100,
            semicircle_m: 100,
            conservation_n: 50,
            conservation_samples: 20,
            tolerance_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    fn new(id: u8, checks: Vec<Check>) -> Self {
        Self {
            id,
            title: TITLES[id as usize - 1],
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    /// `PASS [ 3] title` or `FAIL [ 3] title`.
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scale: Scale,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
}

pub const CRITERIA: u8 = 11;

const TITLES: [&str; CRITERIA as usize] = [
    "trace identity of the sine-kernel operator",
    "Nystrom convergence of det(1 - T)",
    "elementary symmetric functions vs direct correlation integrals",
    "superpolynomial decay of operator eigenvalues",
    "gap ODE vs Fredholm determinant",
    "GUE kernel convergence to the sine kernel",
    "counting-law universality (GUE and Bernoulli)",
    "vague-convergence correlation statistics",
    "semicircle law and rigidity",
    "moment plumbing",
    "infrastructure: persistence, determinism, conservation",
];

/// Configuration, scale and lazily drawn batches shared by the criteria.
pub struct Context {
    pub config: RunConfig,
    pub scale: Scale,
    gue: OnceLock<SpectrumBatch>,
    bernoulli: OnceLock<SpectrumBatch>,
    semicircle: OnceLock<SpectrumBatch>,
}

impl Context {
    pub fn new(config: RunConfig, scale: Scale) -> Self {
        Self {
            config,
            scale,
            gue: OnceLock::new(),
            bernoulli: OnceLock::new(),
            semicircle: OnceLock::new(),
        }
    }

    fn draw<'a>(
        &'a self,
        cell: &'a OnceLock<SpectrumBatch>,
        atom: AtomDistribution,
        n: usize,
        m: usize,
        offset: u64,
    ) -> &'a SpectrumBatch {
        cell.get_or_init(|| {
            let spec = EnsembleSpec::new(n, atom, self.config.seed.wrapping_add(offset)).expect("n >= 1");
            batch_sample(&spec, m).expect("eigensolver converges on Wigner samples")
        })
    }

    pub fn gue_batch(&self) -> &SpectrumBatch {
        let s = &self.scale;
        self.draw(&self.gue, AtomDistribution::Gaussian, s.counting_n, s.counting_m, 0)
    }

    pub fn bernoulli_batch(&self) -> &SpectrumBatch {
        let s = &self.scale;
        self.draw(&self.bernoulli, AtomDistribution::Rademacher, s.counting_n, s.counting_m, 1)
    }

    pub fn semicircle_batch(&self) -> &SpectrumBatch {
        let s = &self.scale;
        self.draw(&self.semicircle, AtomDistribution::Gaussian, s.semicircle_n, s.semicircle_m, 2)
    }

    pub fn run(&self, id: u8) -> CriterionResult {
        let checks = match id {
            1 => trace_identity(),
            2 => nystrom_convergence(),
            3 => moment_identity(),
            4 => eigenvalue_decay(),
            5 => ode_agreement(),
            6 => kernel_convergence(),
            7 => counting_universality(self),
            8 => vague_convergence(self),
            9 => semicircle_and_rigidity(self),
            10 => moment_plumbing(),
            11 => infrastructure(self),
            _ => panic!("no criterion {id}"),
        };
        CriterionResult::new(id, checks)
    }

    pub fn run_all(&self, mut progress: impl FnMut(&CriterionResult)) -> VerifyReport {
        let criteria: Vec<CriterionResult> = (1..=CRITERIA)
            .map(|id| {
                let r = self.run(id);
                progress(&r);
                r
            })
            .collect();
        VerifyReport {
            scale: self.scale.clone(),
            passed: criteria.iter().all(|c| c.passed),
            criteria,
        }
    }
}

fn failed(name: impl Into<String>, err: impl std::fmt::Display) -> Check {
    Check::at_most(format!("{} ({err})", name.into()), f64::INFINITY, 0.0)
}

fn trace_identity() -> Vec<Check> {
    [0.5, 1.0, 2.0]
        .iter()
        .map(|&k| match discretize(k, 80).and_then(|op| operator_spectrum(&op)) {
            Ok(s) => Check::at_most(format!("|sum p_j - K| at K = {k}"), (s.sum() - k).abs(), 1e-8),
            Err(e) => failed(format!("spectrum at K = {k}"), e),
        })
        .collect()
}

fn nystrom_convergence() -> Vec<Check> {
    [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]
        .iter()
        .map(|&k| match (fredholm_det_at(k, 40), fredholm_det_at(k, 80)) {
            (Ok(a), Ok(b)) => Check::at_most(format!("|det_40 - det_80| at K = {k}"), (a - b).abs(), 1e-10),
            (Err(e), _) | (_, Err(e)) => failed(format!("det at K = {k}"), e),
        })
        .collect()
}

fn moment_identity() -> Vec<Check> {
    let mut checks = Vec::new();
    for k_len in [0.5, 1.0] {
        let p = match discretize(k_len, 80).and_then(|op| operator_spectrum(&op)) {
            Ok(s) => s.p,
            Err(e) => {
                checks.push(failed(format!("spectrum at K = {k_len}"), e));
                continue;
            }
        };
        let e = elementary_symmetric_all(&p, 2);
        checks.push(Check::at_most(format!("|e_1 - K| at K = {k_len}"), (e[1] - k_len).abs(), 1e-12));
        for (k, &ek) in e.iter().enumerate().skip(1) {
            match dyson_moment(k, k_len, 40) {
                Ok(d) => checks.push(Check::at_most(
                    format!("|e_{k} - direct| at K = {k_len}"),
                    (ek - d).abs(),
                    1e-8,
                )),
                Err(err) => checks.push(failed(format!("direct moment k = {k}"), err)),
            }
        }
    }
    checks
}

fn eigenvalue_decay() -> Vec<Check> {
    match discretize(1.0, 120).and_then(|op| operator_spectrum(&op)) {
        Ok(s) => {
            let p = |j: usize| s.p.get(j - 1).copied().unwrap_or(0.0);
            vec![
                Check::below("p_10 / p_5 at K = 1", p(10) / p(5), 1e-6),
                Check::below("p_15 at K = 1", p(15), 1e-14),
            ]
        }
        Err(e) => vec![failed("spectrum at K = 1", e)],
    }
}

fn ode_agreement() -> Vec<Check> {
    let mut sol = match solve_jmms(DEFAULT_K_MAX, DEFAULT_K0, DEFAULT_STEPS) {
        Ok(s) => s,
        Err(e) => return vec![failed("gap ODE", e)],
    };
    let mut checks = vec![Check::at_most(
        "|f(K0)/K0 + 1/pi| at K0 = 1e-3",
        (sol.f[0] / sol.k0() + 1.0 / PI).abs(),
        1e-4,
    )];
    match calibrate_scaling(&mut sol, |k| fredholm_det_at(k, 120)) {
        Ok(cal) => checks.push(Check::at_most(
            format!("max |E_ode - det| over probes (s = {:.6})", cal.scale),
            cal.best_residual(),
            1e-3,
        )),
        Err(e) => checks.push(failed("calibration", e)),
    }
    checks
}

fn kernel_convergence() -> Vec<Check> {
    let u = BulkEnergy::new(0.0).expect("0 is in the bulk");
    let d: Vec<f64> = [50, 100, 200].iter().map(|&n| kernel_sup_distance(n, u, 3.0, 41)).collect();
    let mut checks = vec![
        Check::below("sup distance n = 100 vs n = 50", d[1], d[0]),
        Check::below("sup distance n = 200 vs n = 100", d[2], d[1]),
        Check::below("sup distance at n = 200", d[2], 0.1),
    ];
    let n = 400;
    for x in [-1.5, -0.75, 0.0, 0.75, 1.5] {
        let diag = gue_kernel(n, x, x) / n as f64;
        checks.push(Check::at_most(
            format!("|K_n(x,x)/n - rho_sc| at x = {x}, n = {n}"),
            (diag - rho_sc(x)).abs(),
            0.02,
        ));
    }
    checks
}

fn counting_universality(ctx: &Context) -> Vec<Check> {
    let u = BulkEnergy::new(0.0).expect("0 is in the bulk");
    let tol = &ctx.config.tolerances;
    let factor = ctx.scale.tolerance_factor;
    let spec = match discretize(1.0, 80).and_then(|op| operator_spectrum(&op)) {
        Ok(s) => s,
        Err(e) => return vec![failed("spectrum at K = 1", e)],
    };
    let law = limiting_counting_law(&spec);
    let det = fredholm_det(&spec);
    let mut checks = Vec::new();
    let mut hists = Vec::new();
    for (name, batch) in [("gue", ctx.gue_batch()), ("bernoulli", ctx.bernoulli_batch())] {
        let (hist, gap) = match (counting_histogram(batch, u, 1.0), gap_frequency(batch, u, 1.0)) {
            (Ok(h), Ok(g)) => (h, g),
            (Err(e), _) | (_, Err(e)) => {
                checks.push(failed(name, e));
                continue;
            }
        };
        let m1 = counting_moments(&hist, 1).expect("k = 1");
        checks.push(Check::at_most(
            format!("{name}: |mean N - 1| / SE"),
            (m1.raw - 1.0).abs() / m1.raw_stderr,
            tol.z,
        ));
        checks.push(Check::at_most(format!("{name}: TV to limit"), hist.tv_to_law(&law), tol.tv * factor));
        checks.push(Check::at_most(
            format!("{name}: |gap frequency - det| / SE"),
            (gap.value - det).abs() / gap.stderr,
            tol.z,
        ));
        hists.push(hist);
    }
    if let [a, b] = &hists[..] {
        checks.push(Check::at_most("TV gue vs bernoulli", a.tv_to(b), tol.tv_cross * factor));
    }
    checks
}

fn vague_convergence(ctx: &Context) -> Vec<Check> {
    let u = BulkEnergy::new(0.0).expect("0 is in the bulk");
    let batch = ctx.gue_batch();
    [(1, "bump1"), (2, "bump2")]
        .iter()
        .map(|&(k, id)| {
            let f = TestFunction::parse(id, k).expect("shipped test function");
            match correlation_statistic(batch, u, k, &f) {
                Ok(est) => Check::at_most(
                    format!("{id}: |value - target| / bootstrap SE (value {:.6}, target {:.6})", est.value, est.target),
                    est.z.abs(),
                    ctx.config.tolerances.z,
                ),
                Err(e) => failed(id, e),
            }
        })
        .collect()
}

fn semicircle_and_rigidity(ctx: &Context) -> Vec<Check> {
    let batch = ctx.semicircle_batch();
    let ks_tol = ctx.config.tolerances.ks * ctx.scale.tolerance_factor;
    let report = semicircle_test(batch, ks_tol);
    let mut checks = report.checks;
    for u in [-1.5, 0.0, 1.5, 1.99] {
        match rigidity_check(batch, u, 0.9) {
            Ok(r) => checks.push(Check::at_least(
                format!("rigidity fraction at u = {u}, eps = 0.9"),
                r.fraction,
                0.99,
            )),
            Err(e) => checks.push(failed(format!("rigidity at u = {u}"), e)),
        }
    }
    checks
}

fn moment_plumbing() -> Vec<Check> {
    let n = 1000usize;
    let eps = 0.1;
    let t = (n as f64).powf(-1.0 + eps);
    let tol = MomentMatchTolerance::canonical(n);
    let mut checks = Vec::new();
    for base in [AtomDistribution::Rademacher, AtomDistribution::Uniform] {
        let xi2 = match gauss_divisible(&base, t) {
            Ok(d) => d,
            Err(e) => {
                checks.push(failed(format!("gauss_divisible({base})"), e));
                continue;
            }
        };
        for j in 1..=2 {
            let d = (xi2.moment(j).unwrap() - base.moment(j).unwrap()).abs();
            checks.push(Check::at_most(format!("{base}: |moment {j} change| under OU"), d, 8.0 * f64::EPSILON));
        }
        let m4 = (xi2.moment(4).unwrap() - base.moment(4).unwrap()).abs();
        let matched = match_to_order(&base, &xi2, &tol, 4);
        checks.push(Check::at_most(format!("{base}: |moment 4 change| at n = {n}, eps = {eps}"), m4, tol.0[3]));
        checks.push(Check::at_least(
            format!("{base}: match_to_order accepts with delta_4 = n^-3/4"),
            f64::from(u8::from(matched)),
            1.0,
        ));
    }
    match three_point_match(0.0, 3.0) {
        Ok(d) => {
            for j in 1..=4 {
                let diff = (d.moment(j).unwrap() - AtomDistribution::Gaussian.moment(j).unwrap()).abs();
                checks.push(Check::at_most(format!("three_point_match(0, 3) moment {j}"), diff, 1e-10));
            }
        }
        Err(e) => checks.push(failed("three_point_match(0, 3)", e)),
    }
    checks
}

fn infrastructure(ctx: &Context) -> Vec<Check> {
    let mut checks = Vec::new();
    let seed = ctx.config.seed;
    let spec = EnsembleSpec::from_descriptor("gaussdiv:base=bernoulli,t=0.05", 30, seed).expect("valid descriptor");
    let bytes = |b: &SpectrumBatch| {
        let mut v = Vec::new();
        write_batch(b, &mut v).expect("in-memory write");
        v
    };
    match (batch_sample(&spec, 12), batch_sample(&spec, 12)) {
        (Ok(a), Ok(b)) => {
            let raw = bytes(&a);
            let round = read_batch(&raw[..]).map(|back| back == a && bytes(&back) == raw);
            checks.push(Check::at_least("batch round trip is bit-exact", f64::from(u8::from(round.unwrap_or(false))), 1.0));
            checks.push(Check::at_least("resampling is byte-identical", f64::from(u8::from(bytes(&b) == raw)), 1.0));
        }
        (Err(e), _) | (_, Err(e)) => checks.push(failed("sampling", e)),
    }

    let n = ctx.scale.conservation_n;
    let spec = EnsembleSpec::new(n, AtomDistribution::Gaussian, seed.wrapping_add(3)).expect("n >= 1");
    let (mut worst_trace, mut worst_frob): (f64, f64) = (0.0, 0.0);
    for i in 0..ctx.scale.conservation_samples as u64 {
        let w = sample_wigner(&spec, &mut sample_stream(spec.seed, i));
        match eigenvalues(&w) {
            Ok(s) => {
                let tr: f64 = s.eigenvalues.iter().sum();
                let fro: f64 = s.eigenvalues.iter().map(|x| x * x).sum();
                worst_trace = worst_trace.max((tr - w.trace()).abs());
                worst_frob = worst_frob.max((fro - w.frobenius_norm_sq()).abs());
            }
            Err(e) => {
                checks.push(failed(format!("eigensolve of sample {i}"), e));
                break;
            }
        }
    }
    checks.push(Check::at_most("max |sum lambda - tr H|", worst_trace, 1e-9));
    checks.push(Check::at_most("max |sum lambda^2 - ||H||_F^2|", worst_frob, 1e-9));
    checks
}
