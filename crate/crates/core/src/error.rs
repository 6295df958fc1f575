use std::path::PathBuf;

use thiserror::Error;

use crate::varx::EquationRole;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error in column `{column}`: {message}")]
    Schema { column: String, message: String },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("continuity error at {period}: {message}")]
    Continuity { period: String, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("label sets differ: only in GDP {only_in_gdp:?}, only in CPI {only_in_cpi:?}")]
    LabelMismatch {
        only_in_gdp: Vec<String>,
        only_in_cpi: Vec<String>,
    },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("singular design matrix; collinear or degenerate columns: {}", columns.join(", "))]
    Singular { columns: Vec<String> },

    #[error("definiteness error: {0}")]
    Definiteness(String),

    #[error("stationarity error: joint companion spectral radius {spectral_radius:.6} is not below 1")]
    Stationarity { spectral_radius: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("{role} failed: {source}")]
    Equation {
        role: EquationRole,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips any `Equation` tagging and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Equation { source, .. } => source.root(),
            other => other,
        }
    }
}
