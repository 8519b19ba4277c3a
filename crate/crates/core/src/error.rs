use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid matrix structure: {0}")]
    InvalidStructure(String),

    #[error("ill-formed triangular factor: diagonal entry of row {row} is {value}")]
    IllFormedFactor { row: usize, value: f64 },

    #[error("matrix is not SPD: diagonal entry of row {row} is {value}")]
    NotSpd { row: usize, value: f64 },

    #[error("IC(0) breakdown at column {column} (zero-based): pivot {pivot} is not positive")]
    Ic0Breakdown { column: usize, pivot: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error("forward pass diverged: non-finite value in {stage}")]
    DivergedForward { stage: &'static str },

    #[error("checkpoint architecture mismatch: {0}")]
    ArchMismatch(String),

    #[error("training aborted on sample {sample}: {reason}")]
    Training { sample: usize, reason: String },

    #[error("could not reach the sparsity window [{lo}, {hi}] for n = {n}")]
    SpecInfeasible { n: usize, lo: f64, hi: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("assembled system is empty: mesh has no interior vertices")]
    EmptySystem,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics (breakdown, divergence) rather than
    /// of the inputs or the filesystem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Ic0Breakdown { .. }
                | Error::DivergedForward { .. }
                | Error::NotSpd { .. }
                | Error::IllFormedFactor { .. }
                | Error::Training { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Json(_) | Error::Csv(_) | Error::MatrixMarket(_)
        )
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
