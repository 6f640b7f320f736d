// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("oracle capacity exceeded: {requested} > cap {cap}")]
    OracleCapacity { requested: usize, cap: usize },

    #[error(
        "singular or ill-conditioned system: pivot {pivot:e} at column {column} (ratio {ratio:e})"
    )]
    Singular {
        column: usize,
        pivot: f64,
        ratio: f64,
    },

    #[error("degenerate bandwidth: sigma is zero at point {point} (duplicate points?)")]
    DegenerateBandwidth { point: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("trial {trial} (seed {seed}) failed: {source}")]
    Trial {
        trial: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. }
            | Error::Singular { .. }
            | Error::DegenerateBandwidth { .. } => true,
            Error::Trial { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
