//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;

use topoflow::config::RunConfig;
use topoflow::verify;

fn main() -> ExitCode {
    let cfg = RunConfig::default();
    let report = match verify::run(&cfg, |c| println!("{}", c.line())) {
        Ok(r) => r,
        Err(e) => {
            println!("acceptance suite aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    let failed = report.failed();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", report.criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
