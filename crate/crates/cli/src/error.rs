use std::path::PathBuf;

use thiserror::Error;
use zib_core::analytic::AnalyticError;
use zib_core::mcmc::McmcError;
use zib_core::model::ModelError;
use zib_core::simulation::SimError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read config {path}: {msg}")]
    Config { path: PathBuf, msg: String },

    #[error("cannot read {path}: {source}")]
    ReadData {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed CSV in {path}: {msg}")]
    Csv { path: PathBuf, msg: String },
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("row {row}, column '{column}': outcome must be 0 or 1, got '{value}'")]
    NonBinary {
        row: u64,
        column: String,
        value: String,
    },
    #[error("row {row}, column '{column}': expected a finite number, got '{value}'")]
    NonNumeric {
        row: u64,
        column: String,
        value: String,
    },
    #[error("invalid data: {0}")]
    Data(String),

    #[error("sampler did not converge: {0}")]
    NotConverged(String),

    #[error("{0}")]
    Compute(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::ReadData { .. }
            | CliError::Csv { .. }
            | CliError::UnknownColumn(_)
            | CliError::NonBinary { .. }
            | CliError::NonNumeric { .. }
            | CliError::Data(_) => 3,
            CliError::NotConverged(_) => 4,
            CliError::Compute(_) | CliError::Output { .. } => 1,
        }
    }
}

impl From<McmcError> for CliError {
    fn from(e: McmcError) -> Self {
        match e {
            McmcError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Model(m) => CliError::Usage(m.to_string()),
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Mcmc(m) => m.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Bad prior settings are argument errors; bad data are caught while loading.
impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}
