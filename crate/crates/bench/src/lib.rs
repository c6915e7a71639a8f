//! Benchmark problems, offline/online drivers, metrics and report files for
//! the accelerated transport solvers in `rte-core`.

pub mod cases;
pub mod config;
pub mod methods;
pub mod metrics;
pub mod offline;
pub mod online;
pub mod report;
pub mod selfcheck;

use std::path::PathBuf;

pub use cases::{BenchmarkCase, CaseId};
pub use config::BenchConfig;
pub use methods::Method;
pub use metrics::{MetricsRow, MetricsTable};
pub use offline::{run_offline, OfflineArtifacts};
pub use online::{run_case, run_method, CaseRun, MethodRuns};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] rte_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("missing offline artifact {0}; run the offline stage first")]
    MissingArtifact(PathBuf),
    #[error("configuration: {0}")]
    Config(String),
    #[error("malformed report: {0}")]
    Format(String),
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;
