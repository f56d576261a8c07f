//! Subcommand implementations. Each writes its files under the configured
//! output directory and a short human-readable summary to `out`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sinelab_core::fredholm::{
    discretize, elementary_symmetric_all, fredholm_det, fredholm_det_at, limiting_counting_law,
    operator_spectrum,
};
use sinelab_core::gapode::{calibrate_scaling, solve_jmms, CALIBRATION_PROBES};
use sinelab_core::kernels::{gue_kernel_normalized, k_dyson, kernel_sup_distance};
use sinelab_core::spectra::{batch_sample, read_batch, write_batch, write_pooled_csv};
use sinelab_core::stats::{
    averaged_correlation_statistic, compare_ensembles, correlation_statistic, counting_histogram,
    counting_moments, gap_frequency, rigidity_check, semicircle_test, CompareTolerance,
};
use sinelab_core::{BulkEnergy, EnsembleSpec, SpectrumBatch, TestFunction};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, write_file, write_report, Table};

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| CliError::io(Path::new("<stdout>"), e))?
    };
}

/// Half-width and grid size of the kernel table, in mean spacings.
pub const KERNEL_HALF_WIDTH: f64 = 3.0;
pub const KERNEL_GRID: usize = 41;

fn bulk(cfg: &RunConfig) -> Result<BulkEnergy, CliError> {
    Ok(BulkEnergy::new(cfg.u)?)
}

pub fn default_batch_name(cfg: &RunConfig) -> String {
    let desc: String = cfg
        .ensemble
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '-' })
        .collect();
    format!("{desc}_n{}_M{}_s{}.wdmb", cfg.n, cfg.samples, cfg.seed)
}

pub fn load_batch(path: &Path) -> Result<SpectrumBatch, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_batch(std::io::BufReader::new(f)).map_err(|source| CliError::BatchFile {
        path: path.to_path_buf(),
        source,
    })
}

/// Draws `M` samples and writes the binary batch (plus the pooled CSV when
/// asked).
pub fn cmd_sample(
    cfg: &RunConfig,
    path: Option<PathBuf>,
    csv: bool,
    out: &mut dyn Write,
) -> Result<PathBuf, CliError> {
    let spec = EnsembleSpec::from_descriptor(&cfg.ensemble, cfg.n, cfg.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let start = Instant::now();
    let batch = batch_sample(&spec, cfg.samples)?;
    let elapsed = start.elapsed().as_secs_f64();
    let path = path.unwrap_or_else(|| cfg.out_dir.join(default_batch_name(cfg)));
    let mut bytes = Vec::new();
    write_batch(&batch, &mut bytes)?;
    write_file(&path, &bytes)?;
    say!(
        out,
        "sampled {}: n = {}, M = {}, seed = {} in {elapsed:.2} s -> {}",
        spec.descriptor(),
        cfg.n,
        cfg.samples,
        cfg.seed,
        path.display()
    );
    if csv {
        let csv_path = path.with_extension("csv");
        let mut text = Vec::new();
        write_pooled_csv(&batch, &mut text)?;
        write_file(&csv_path, &text)?;
        say!(out, "pooled eigenvalues -> {}", csv_path.display());
    }
    Ok(path)
}

#[derive(Debug, Serialize)]
struct FredholmSummary {
    length: f64,
    order: usize,
    det: f64,
    sum_p: f64,
    retained: usize,
}

/// `p_j`, `det(1 - T)`, `e_k` and the Poisson-binomial law at `K`.
pub fn cmd_theory_fredholm(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = operator_spectrum(&discretize(cfg.length, cfg.order)?)?;
    let det = fredholm_det(&spec);
    let sum = spec.sum();

    let mut p = Table::new(&["j", "p_j"]);
    for (j, &x) in spec.p.iter().enumerate() {
        p.push(vec![(j + 1).into(), x.into()]);
    }
    p.write(cfg, "fredholm_p.csv")?;

    let law = limiting_counting_law(&spec);
    let mut pmf = Table::new(&["count", "probability"]);
    for (c, &x) in law.pmf.iter().enumerate().take_while(|(c, &x)| *c < 2 || x > 0.0) {
        pmf.push(vec![c.into(), x.into()]);
    }
    pmf.write(cfg, "fredholm_pmf.csv")?;

    let e = elementary_symmetric_all(&spec.p, 4);
    let mut moments = Table::new(&["k", "e_k"]);
    for (k, &x) in e.iter().enumerate() {
        moments.push(vec![k.into(), x.into()]);
    }
    moments.write(cfg, "fredholm_moments.csv")?;

    write_report(
        cfg,
        "fredholm.json",
        &FredholmSummary {
            length: cfg.length,
            order: cfg.order,
            det,
            sum_p: sum,
            retained: spec.p.len(),
        },
    )?;
    say!(out, "K = {}, m = {}", cfg.length, cfg.order);
    say!(out, "det(1-T) = {}", fmt_f64(det));
    say!(out, "sum p_j  = {}  (|sum - K| = {:.3e})", fmt_f64(sum), (sum - cfg.length).abs());
    say!(out, "p_1..p_5 = {:?}", &spec.p[..spec.p.len().min(5)]);
    Ok(())
}

#[derive(Debug, Serialize)]
struct GapOdeSummary {
    scale: f64,
    residuals: Vec<(f64, f64)>,
    max_abs_diff: f64,
    min_radicand: f64,
}

/// Solves the gap ODE, calibrates its scaling against `det(1 - T)` and
/// tabulates both on a grid of `K`.
pub fn cmd_theory_gap_ode(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let needed = CALIBRATION_PROBES[CALIBRATION_PROBES.len() - 1];
    if cfg.k_max < needed {
        return Err(CliError::Usage(format!(
            "gap-ode calibration probes K up to {needed}; got Kmax = {}",
            cfg.k_max
        )));
    }
    let mut sol = solve_jmms(cfg.k_max, cfg.k0, cfg.steps)?;
    let cal = calibrate_scaling(&mut sol, |k| fredholm_det_at(k, cfg.order))?;

    let mut table = Table::new(&["K", "f", "E_ode", "E_fredholm", "abs_diff"]);
    let points = (cfg.k_max / 0.05).round() as usize;
    let mut max_diff: f64 = 0.0;
    for i in 1..=points {
        let k = (i as f64 * 0.05).min(cfg.k_max);
        let e = sol.gap_at(k).expect("inside the grid");
        let f = sol.f_at(k).expect("inside the grid");
        let d = fredholm_det_at(cal.scale * k, cfg.order)?;
        max_diff = max_diff.max((e - d).abs());
        table.push(vec![k.into(), f.into(), e.into(), d.into(), (e - d).abs().into()]);
    }
    table.write(cfg, "gap_ode.csv")?;
    write_report(
        cfg,
        "gap_ode.json",
        &GapOdeSummary {
            scale: cal.scale,
            residuals: cal.residuals.clone(),
            max_abs_diff: max_diff,
            min_radicand: sol.min_radicand,
        },
    )?;
    say!(out, "calibrated scale s = {} (E_ode(K) = det(1 - T) on [0, sK])", cal.scale);
    for (s, r) in &cal.residuals {
        say!(out, "  s = {s:.6}: max probe residual {r:.3e}");
    }
    say!(out, "max |E_ode - E_fredholm| on the table: {max_diff:.3e}");
    Ok(())
}

/// Normalized finite-n GUE kernel against the sine kernel on a square grid.
pub fn cmd_theory_kernel(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let u = bulk(cfg)?;
    let mut table = Table::new(&["t", "tp", "K_n", "K_dyson", "abs_diff"]);
    let step = 2.0 * KERNEL_HALF_WIDTH / (KERNEL_GRID - 1) as f64;
    let coord = |i: usize| -KERNEL_HALF_WIDTH + i as f64 * step;
    for i in 0..KERNEL_GRID {
        for j in 0..KERNEL_GRID {
            let (t, tp) = (coord(i), coord(j));
            let kn = gue_kernel_normalized(cfg.n, u, t, tp);
            let kd = k_dyson(t, tp);
            table.push(vec![t.into(), tp.into(), kn.into(), kd.into(), (kn - kd).abs().into()]);
        }
    }
    table.write(cfg, "kernel.csv")?;
    let sup = kernel_sup_distance(cfg.n, u, KERNEL_HALF_WIDTH, KERNEL_GRID);
    say!(out, "n = {}, u = {}", cfg.n, cfg.u);
    say!(out, "K_n(0, 0) = {}", fmt_f64(gue_kernel_normalized(cfg.n, u, 0.0, 0.0)));
    say!(out, "sup |K_n - K_dyson| on [-3, 3]^2 = {sup:.6e}");
    Ok(())
}

/// Correlation statistic, optionally averaged over `[u - b, u + b]`.
pub fn cmd_analyze_correlate(
    cfg: &RunConfig,
    batch_path: &Path,
    average: Option<(f64, usize)>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let batch = load_batch(batch_path)?;
    let u = bulk(cfg)?;
    let f = TestFunction::parse(&cfg.test_function, cfg.k)?;
    let est = match average {
        Some((b, grid)) => averaged_correlation_statistic(&batch, u, b, grid, cfg.k, &f)?,
        None => correlation_statistic(&batch, u, cfg.k, &f)?,
    };
    let mut table = Table::new(&["u", "k", "F", "M", "value", "stderr", "target", "z"]);
    table.push(vec![
        est.u.into(),
        est.k.into(),
        est.test_function.as_str().into(),
        est.samples.into(),
        est.value.into(),
        est.stderr.into(),
        est.target.into(),
        est.z.into(),
    ]);
    table.write(cfg, "correlate.csv")?;
    write_report(cfg, "correlate.json", &est)?;
    say!(
        out,
        "{} (k = {}) at u = {}: {:.6} +- {:.6}, target {:.6}, z = {:.2}",
        est.test_function,
        est.k,
        est.u,
        est.value,
        est.stderr,
        est.target,
        est.z
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct CountSummary<'a> {
    histogram: &'a sinelab_core::CountingHistogram,
    tv_to_limit: f64,
    gap_frequency: f64,
    gap_stderr: f64,
    det: f64,
}

/// Counting histogram on `[u, u + K/(n ρ_sc(u)))` against the limit law.
pub fn cmd_analyze_count(cfg: &RunConfig, batch_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let batch = load_batch(batch_path)?;
    let u = bulk(cfg)?;
    let hist = counting_histogram(&batch, u, cfg.length)?;
    let spec = operator_spectrum(&discretize(cfg.length, cfg.order)?)?;
    let law = limiting_counting_law(&spec);
    let e = elementary_symmetric_all(&spec.p, 4);
    let gap = gap_frequency(&batch, u, cfg.length)?;

    let mut pmf = Table::new(&["count", "empirical", "limit"]);
    for c in 0..hist.pmf.len().max(4) {
        pmf.push(vec![c.into(), hist.prob(c).into(), law.prob(c).into()]);
    }
    pmf.write(cfg, "count_pmf.csv")?;

    let mut mom = Table::new(&["k", "raw", "raw_stderr", "binomial", "binomial_stderr", "e_k"]);
    for (k, &ek) in e.iter().enumerate().skip(1) {
        let m = counting_moments(&hist, k)?;
        mom.push(vec![
            k.into(),
            m.raw.into(),
            m.raw_stderr.into(),
            m.binomial.into(),
            m.binomial_stderr.into(),
            ek.into(),
        ]);
    }
    mom.write(cfg, "count_moments.csv")?;

    let tv = hist.tv_to_law(&law);
    let det = fredholm_det(&spec);
    write_report(
        cfg,
        "count.json",
        &CountSummary {
            histogram: &hist,
            tv_to_limit: tv,
            gap_frequency: gap.value,
            gap_stderr: gap.stderr,
            det,
        },
    )?;
    say!(out, "M = {}, mean count {:.6} (limit {})", hist.samples, hist.mean, cfg.length);
    say!(out, "TV to Poisson-binomial limit: {tv:.4}");
    say!(out, "gap frequency {:.5} +- {:.5}, det(1-T) = {det:.5}", gap.value, gap.stderr);
    Ok(())
}

pub fn cmd_analyze_semicircle(cfg: &RunConfig, batch_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let batch = load_batch(batch_path)?;
    let report = semicircle_test(&batch, cfg.tolerances.ks);
    write_report(cfg, "semicircle.json", &report)?;
    say!(out, "pooled KS = {:.5} ({} eigenvalues)", report.ks.unwrap_or(f64::NAN), batch.n() * batch.len());
    for c in &report.checks {
        say!(out, "  {c}");
    }
    Ok(())
}

pub fn cmd_analyze_rigidity(cfg: &RunConfig, batch_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let batch = load_batch(batch_path)?;
    let r = rigidity_check(&batch, cfg.u, cfg.epsilon)?;
    write_report(cfg, "rigidity.json", &r)?;
    say!(
        out,
        "N[-2, {}] vs n*F_sc = {:.3}: {:.2}% within n^{} = {:.2} (max deviation {:.2})",
        r.u,
        r.expected,
        100.0 * r.fraction,
        r.epsilon,
        r.allowance,
        r.max_deviation
    );
    Ok(())
}

pub fn cmd_analyze_compare(
    cfg: &RunConfig,
    a_path: &Path,
    b_path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let a = load_batch(a_path)?;
    let b = load_batch(b_path)?;
    let u = bulk(cfg)?;
    let f = TestFunction::parse(&cfg.test_function, cfg.k)?;
    let tol = CompareTolerance {
        tv: cfg.tolerances.tv_cross,
        z: cfg.tolerances.z,
    };
    let report = compare_ensembles(&a, &b, u, cfg.length, &f, &tol)?;
    let ha = counting_histogram(&a, u, cfg.length)?;
    let hb = counting_histogram(&b, u, cfg.length)?;
    let mut table = Table::new(&["count", "pmf_a", "pmf_b"]);
    for c in 0..ha.pmf.len().max(hb.pmf.len()) {
        table.push(vec![c.into(), ha.prob(c).into(), hb.prob(c).into()]);
    }
    table.write(cfg, "compare_pmf.csv")?;
    write_report(cfg, "compare.json", &report)?;
    for w in &report.warnings {
        say!(out, "warning: {w}");
    }
    say!(out, "{} vs {}", a.spec.descriptor(), b.spec.descriptor());
    for c in &report.checks {
        say!(out, "  {c}");
    }
    Ok(())
}
