//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs all ten criteria. Passing criterion
//! numbers after `--` runs only those (the determinism rerun is then skipped).
//! Set `ACCEPTANCE_VERBOSE` to print every check, not only failing ones.

use std::process::ExitCode;

use factor_cavity::acceptance::{run_criterion, run_suite, CriterionResult};
use factor_cavity::parallel::Workers;

const SEED: u64 = 20_240_601;

fn report_failures(r: &CriterionResult) {
    println!("{}", r.line());
    let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
    for c in r.checks.iter().filter(|c| verbose || !c.passed) {
        println!(
            "       {} / {}: value {} reference {} tolerance {}",
            c.case, c.quantity, c.value, c.reference, c.tolerance
        );
    }
}

fn main() -> ExitCode {
    let selected: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let workers = Workers::new(None).expect("thread pool");
    let alt = Workers::new(Some(if workers.count() > 1 { 1 } else { 2 })).expect("thread pool");
    println!("acceptance suite: seed {SEED}, {} workers", workers.count());
    let passed = if selected.is_empty() {
        let report = run_suite(&workers, &alt, SEED, report_failures);
        println!("suite wall time {:.1} s", report.elapsed.as_secs_f64());
        report.passed()
    } else {
        selected
            .iter()
            .map(|&id| run_criterion(id, &workers, SEED))
            .inspect(report_failures)
            .all(|r| r.passed())
    };
    println!("acceptance: {}", if passed { "PASS" } else { "FAIL" });
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
