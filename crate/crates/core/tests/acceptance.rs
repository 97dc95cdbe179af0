//! One PASS/FAIL line per acceptance criterion. Runs with `harness = false`
//! so the lines always print; exits nonzero if any criterion fails.
//!
//! `cargo test --test acceptance -- 3 7` runs only criteria 3 and 7.

use std::process::ExitCode;

use zd_core::suite::{self, SuiteOptions};

fn main() -> ExitCode {
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<usize> = if picked.is_empty() { (1..=11).collect() } else { picked };
    let opts = SuiteOptions::default();
    let mut failed = 0;
    for n in ids {
        let c = suite::criterion(n, &opts);
        println!("{}", c.line());
        if !c.passed() {
            failed += 1;
            for k in c.checks.iter().filter(|k| !k.passed) {
                println!("       {}: {}", k.name, k.detail);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
