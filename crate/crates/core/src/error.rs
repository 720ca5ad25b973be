use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("length mismatch: header declares {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("empty Gaussian specification list")]
    EmptySpecs,
    #[error("domain is disconnected under the chosen connectivity ({components} components)")]
    Disconnected { components: usize },
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("infeasible mass m = {0}; expected 0 < m <= 1")]
    InfeasibleMass(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("attributes required when alpha < 1")]
    MissingAttributes,
    #[error("probability vector is not balanced")]
    NotBalanced,
    #[error("invalid document: {0}")]
    InvalidDocument(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
