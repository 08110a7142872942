use std::io;
use std::path::PathBuf;

use redalloc_core::pipeline::PipelineError;
use redalloc_core::{EstimateError, ModelError, OracleError, ProvisionError, StructureError, TopologyError};
use thiserror::Error;

use crate::format::FormatError;

/// Process exit code for configuration problems.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit code when the scenario cannot be served.
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io: {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("format: {0}")]
    Format(#[from] FormatError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("structure: {0}")]
    Structure(#[from] StructureError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("provision: {0}")]
    Provision(#[from] ProvisionError),
    #[error("estimate: {0}")]
    Estimate(#[from] EstimateError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
}

impl From<PipelineError> for HarnessError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Provision(e) => e.into(),
            PipelineError::Estimate(e) => e.into(),
            PipelineError::Model(e) => e.into(),
        }
    }
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Provision(ProvisionError::Model(_)) => EXIT_CONFIG,
            Self::Provision(_) | Self::Estimate(EstimateError::Infeasible { .. }) => EXIT_INFEASIBLE,
            Self::Oracle(OracleError::Infeasible(_)) => EXIT_INFEASIBLE,
            _ => EXIT_CONFIG,
        }
    }
}
