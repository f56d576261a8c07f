use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sinelab_cli::commands::{
    cmd_analyze_compare, cmd_analyze_correlate, cmd_analyze_count, cmd_analyze_rigidity,
    cmd_analyze_semicircle, cmd_sample, cmd_theory_fredholm, cmd_theory_gap_ode, cmd_theory_kernel,
};
use sinelab_cli::output::write_report;
use sinelab_cli::verify::{Context, Scale};
use sinelab_cli::{exit, CliError, ConfigArgs, RunConfig};

/// Bulk spectral statistics of Wigner matrices: sampling, analytic limits
/// and Monte Carlo comparisons.
#[derive(Parser)]
#[command(name = "sinelab", version)]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a batch of spectra and write it as a binary batch file.
    Sample {
        /// Batch file (default: <out-dir>/<ensemble>_n<n>_M<M>_s<seed>.wdmb).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the pooled eigenvalues as CSV next to the batch.
        #[arg(long)]
        csv: bool,
    },
    /// Analytic limits.
    #[command(subcommand)]
    Theory(Theory),
    /// Monte Carlo estimators on batch files.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Run the acceptance suite and write verify.json.
    Verify {
        /// Reduced-size smoke run.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Subcommand)]
enum Theory {
    /// Sine-kernel operator eigenvalues, det(1 - T), e_k and the counting law.
    Fredholm,
    /// Gap probability from the ODE, calibrated against det(1 - T).
    GapOde,
    /// Finite-n GUE kernel against the sine kernel.
    Kernel,
}

#[derive(Subcommand)]
enum Analyze {
    /// Correlation statistic of a test function.
    Correlate {
        batch: PathBuf,
        /// Average over [u - b, u + b].
        #[arg(long = "average-b")]
        average_b: Option<f64>,
        /// Grid size for the average.
        #[arg(long, default_value_t = 5)]
        grid: usize,
    },
    /// Eigenvalue counts in [u, u + K/(n rho_sc(u))).
    Count { batch: PathBuf },
    /// Pooled eigenvalues against the semicircle law.
    Semicircle { batch: PathBuf },
    /// Eigenvalue counts in [-2, u] against n times the semicircle mass.
    Rigidity { batch: PathBuf },
    /// Counting-law distance and correlation z-test between two batches.
    Compare { batch_a: PathBuf, batch_b: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.config)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Sample { out: path, csv } => cmd_sample(&cfg, path, csv, &mut out).map(|_| ()),
        Command::Theory(Theory::Fredholm) => cmd_theory_fredholm(&cfg, &mut out),
        Command::Theory(Theory::GapOde) => cmd_theory_gap_ode(&cfg, &mut out),
        Command::Theory(Theory::Kernel) => cmd_theory_kernel(&cfg, &mut out),
        Command::Analyze(a) => match a {
            Analyze::Correlate { batch, average_b, grid } => {
                cmd_analyze_correlate(&cfg, &batch, average_b.map(|b| (b, grid)), &mut out)
            }
            Analyze::Count { batch } => cmd_analyze_count(&cfg, &batch, &mut out),
            Analyze::Semicircle { batch } => cmd_analyze_semicircle(&cfg, &batch, &mut out),
            Analyze::Rigidity { batch } => cmd_analyze_rigidity(&cfg, &batch, &mut out),
            Analyze::Compare { batch_a, batch_b } => cmd_analyze_compare(&cfg, &batch_a, &batch_b, &mut out),
        },
        Command::Verify { quick } => {
            let scale = if quick { Scale::quick() } else { Scale::full() };
            let ctx = Context::new(cfg.clone(), scale);
            let report = ctx.run_all(|r| {
                let _ = writeln!(out, "{}", r.line());
                for c in r.checks.iter().filter(|c| !c.passed) {
                    let _ = writeln!(out, "       {c}");
                }
            });
            let path = write_report(&cfg, "verify.json", &report)?;
            let failed = report.criteria.iter().filter(|c| !c.passed).count();
            let _ = writeln!(out, "report -> {}", path.display());
            if failed > 0 {
                return Err(CliError::CriteriaFailed {
                    failed,
                    total: report.criteria.len(),
                });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::SUCCESS });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::SUCCESS),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
