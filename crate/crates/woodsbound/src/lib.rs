//! Std companion of `woodsbound-core`: data files, script loading, reports,
//! tables and a thread-pool executor.

pub mod data;
pub mod exec;
pub mod format;
pub mod lint;
pub mod report;
pub mod script_file;
pub mod tables;

use std::time::Instant;

use woodsbound_core::certify::{Budget, Executor, Options};
use woodsbound_core::script::{replay_script, ProofScript, ReplayConfig, ReplayError, Report};
use woodsbound_core::ConstantsTable;

pub use data::{DataError, DataSource};
pub use report::{markdown, ReportJson, RunStats};

/// Replays a script and wraps the result with timing.
pub fn verify_script(
    script: &ProofScript,
    consts: &ConstantsTable,
    budget: Budget,
    options: Options,
    exec: &dyn Executor,
    jobs: usize,
) -> Result<(Report, ReportJson), ReplayError> {
    let start = Instant::now();
    let cfg = ReplayConfig {
        budget,
        options,
        exec,
    };
    let report = replay_script(script, consts, &cfg)?;
    let stats = RunStats {
        seconds: start.elapsed().as_secs_f64(),
        jobs,
    };
    let json = ReportJson::new(&report, Some(stats));
    Ok((report, json))
}
