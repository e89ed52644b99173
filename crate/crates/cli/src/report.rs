use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::{ConfigError, RunConfig};

/// Schema tag and version of the run report.
pub const REPORT_SCHEMA: &str = "erepr.run";
pub const REPORT_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;
pub const EXIT_EMPTY_CELL: i32 = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Library(#[from] erepr::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use erepr::Error as E;
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Io { .. } => EXIT_IO,
            RunError::Library(e) => match e {
                E::Capacity { .. } => EXIT_CAPACITY,
                E::EmptyCell { .. } => EXIT_EMPTY_CELL,
                E::Contract(_) | E::Invariant(_) => EXIT_ASSERTION,
                E::Argument(_) | E::Locality(_) | E::Parse { .. } => EXIT_CONFIG,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub erepr: &'static str,
    pub erepr_cli: &'static str,
}

pub const VERSIONS: Versions = Versions {
    erepr: erepr::VERSION,
    erepr_cli: env!("CARGO_PKG_VERSION"),
};

/// Everything a run produced. Emitted on stdout whether or not the built-in
/// checks passed.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub version: u32,
    pub experiment: String,
    pub config: RunConfig,
    pub payload: Value,
    pub checks: Vec<Check>,
    pub versions: Versions,
    pub wall_time_seconds: f64,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}
