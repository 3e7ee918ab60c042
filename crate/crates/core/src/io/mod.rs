//! Files: run and scenario configuration, CSV data, draw archives and the
//! summary tables written by a fit or a simulation.

mod archive;
mod config;
mod data;
mod tables;

pub use archive::{ArchiveMeta, DrawArchive};
pub use config::{
    ChainSection, ColumnSpec, CorrelationEntry, InputSection, PriorSection, RunConfig, ScenarioFile, FORMAT_VERSION,
};
pub use data::{load_csv, write_csv, LoadedData};
pub use tables::{
    read_digest, read_replications, read_summary, write_acf, write_replications, write_report, write_summary,
    write_timings, DIGEST_PREFIX,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::mcmc::McmcError;
use crate::metrics::DiagnosticsError;
use crate::rank::{ColumnKind, RankError};
use crate::spatial::SpatialError;
use crate::synthetic::SyntheticError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse { row: usize, column: String, value: String },
    #[error("row {row}, column '{column}': {value} is not valid for a {kind} column")]
    KindMismatch {
        row: usize,
        column: String,
        kind: ColumnKind,
        value: f64,
    },
    #[error("column '{0}' not found in header")]
    MissingColumn(String),
    #[error("config digest mismatch in {path}: expected {expected}, found {found}")]
    DigestMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Mcmc(#[from] McmcError),
    #[error(transparent)]
    Synthetic(#[from] SyntheticError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

impl IoError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            IoError::File { .. } => "file",
            IoError::Config(_) => "config",
            IoError::Format { .. } => "format",
            IoError::Parse { .. } => "parse",
            IoError::KindMismatch { .. } => "kind_mismatch",
            IoError::MissingColumn(_) => "missing_column",
            IoError::DigestMismatch { .. } => "digest_mismatch",
            IoError::Rank(_) => "data",
            IoError::Spatial(_) => "spatial",
            IoError::Mcmc(_) => "sampler",
            IoError::Synthetic(_) => "scenario",
            IoError::Diagnostics(_) => "diagnostics",
        }
    }

    pub(crate) fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, message: impl Into<String>) -> Self {
        IoError::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))
}

pub(crate) fn write_string(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| IoError::file(path, e))
}

/// Shortest decimal form that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
