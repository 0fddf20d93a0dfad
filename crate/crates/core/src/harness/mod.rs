//! Benchmark execution inside measurement sessions: start the counters,
//! run the benchmark synchronously, stop the counters and total up.

mod runner;
mod spec;
mod summary;

pub use runner::{
    read_manifest, run_benchmark, run_suite, write_manifest, ChildOutput, RunOptions, RunRecord, SpecFailure,
    SuiteOutcome, MANIFEST_FILE,
};
pub use spec::{BenchmarkSpec, CommandSpec, SuiteConfig, SuiteDefaults, SuiteEntry, DEFAULT_REPETITIONS};
pub use summary::{summarize, GroupSummary, RunSummary, Stats};

use crate::metering::MeteringError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("cannot start {command:?}: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("build of {name} failed with status {status:?}")]
    BuildFailed { name: String, status: Option<i32> },
    #[error(transparent)]
    Metering(#[from] MeteringError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
