//! Acceptance gate: every criterion at full scale, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach stdout; the
//! process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use sinelab_cli::output::render_report;
use sinelab_cli::verify::{Context, CriterionResult, Scale, CRITERIA};
use sinelab_cli::RunConfig;
use sinelab_core::stats::Check;

/// Criterion 11 additionally requires the whole `verify` report to be
/// reproducible: two independent quick runs must render identical bytes.
fn verify_is_deterministic() -> Check {
    let render = || {
        let cfg = RunConfig::default();
        let report = Context::new(cfg.clone(), Scale::quick()).run_all(|_| {});
        render_report(&cfg, &report)
    };
    let (a, b) = (render(), render());
    Check::at_least("verify --quick reports are byte-identical", f64::from(u8::from(a == b)), 1.0)
}

fn print(r: &CriterionResult, seconds: f64) {
    println!("{}  ({seconds:.1} s)", r.line());
    for c in &r.checks {
        println!("       {c}");
    }
}

fn main() -> ExitCode {
    let ctx = Context::new(RunConfig::default(), Scale::full());
    let mut results = Vec::new();
    for id in 1..=CRITERIA {
        let start = Instant::now();
        let mut r = ctx.run(id);
        if id == 11 {
            let c = verify_is_deterministic();
            r.passed &= c.passed;
            r.checks.push(c);
        }
        print(&r, start.elapsed().as_secs_f64());
        results.push(r);
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" {failed:?}") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
