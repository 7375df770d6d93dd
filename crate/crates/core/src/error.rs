use std::path::PathBuf;

use thiserror::Error;

use crate::substrate::UnitId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("synapse references unknown unit {0}")]
    UnknownUnit(UnitId),

    #[error("unit {0} is not an externally driven unit")]
    NotExternal(UnitId),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("connection mask is {got_rows}x{got_cols}, expected {rows}x{cols}")]
    MaskDimension {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },

    #[error("SIC configuration table is empty")]
    EmptyTable,

    #[error("at least {needed} samples required, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("susceptibility peak is not bracketed by the temperature grid")]
    PeakNotBracketed,

    #[error("long-term rate of input {0} is zero")]
    ZeroLongTermRate(usize),

    #[error("invalid Ising lattice: {0}")]
    Lattice(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownUnit(_) | Error::NotExternal(_) => "network",
            Error::Config(_) | Error::Toml(_) => "config",
            Error::MaskDimension { .. } => "mask_dimension",
            Error::EmptyTable => "empty_table",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::PeakNotBracketed => "peak_not_bracketed",
            Error::ZeroLongTermRate(_) => "zero_rate",
            Error::Lattice(_) => "lattice",
            Error::Io { .. } | Error::Csv { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
