//! Experiment runner for the integral-formula extension operator: configs in,
//! CSV/JSON reports with PASS/FAIL/INCONCLUSIVE verdicts out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, Kind, Suite};
pub use error::{HarnessError, Result};
pub use experiments::run;
pub use report::{emit, ReportRow, Tally};

/// Runs the experiments of `suite` (only those of `kind` when given), in file order.
pub fn run_suite(suite: &Suite, kind: Option<Kind>) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for cfg in suite
        .experiment
        .iter()
        .filter(|c| kind.is_none_or(|k| c.kind == k))
    {
        rows.extend(run(cfg)?);
    }
    Ok(rows)
}
