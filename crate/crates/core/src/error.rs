use thiserror::Error;

/// Errors produced anywhere in the reduction and extraction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("column {0} has zero L1 norm")]
    ZeroColumn(usize),

    #[error("mean-removed vector is degenerate (norm {norm:e})")]
    DegenerateVector { norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("NNLS active-set loop exceeded {cap} iterations")]
    MaxIterations { cap: usize },

    #[error("requested rank {rank} exceeds min(d, n) = {max}")]
    RankTooLarge { rank: usize, max: usize },

    #[error("endmember count r = {r} is invalid for a model with {m} columns")]
    BadRank { r: usize, m: usize },

    #[error("LP solver hit its iteration limit")]
    IterationLimit,

    #[error("LP solver numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("LP is infeasible: {0}")]
    Infeasible(String),

    #[error("LP solution has only {nonzero} nonzero diagonal entries, need {r}")]
    DegenerateDiagonal { nonzero: usize, r: usize },

    #[error("augmentation asks for {requested} columns but only {available} lie outside K")]
    InsufficientColumns { requested: usize, available: usize },

    #[error("reference signatures {first} and {second} both match column {column}")]
    DuplicateMatch {
        first: usize,
        second: usize,
        column: usize,
    },

    #[error("noise intensity is positive but the noise matrix is zero")]
    ZeroNoise,

    #[error("exact conditioning computation supports at most {max} columns, got {cols}")]
    TooManyColumns { cols: usize, max: usize },

    #[error("index set has {k} elements, fewer than r = {r}")]
    KSmallerThanR { k: usize, r: usize },
}

/// Coarse grouping of [`Error`] variants, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Usage,
    Io,
    Numerical,
    Infeasible,
}

impl Error {
    pub fn family(&self) -> ErrorFamily {
        match self {
            Error::InvalidArgument(_) | Error::RankTooLarge { .. } | Error::BadRank { .. } => {
                ErrorFamily::Usage
            }
            Error::Io(_) | Error::Parse { .. } | Error::DimensionMismatch { .. } => ErrorFamily::Io,
            Error::InvalidMatrix(_)
            | Error::ZeroColumn(_)
            | Error::DegenerateVector { .. }
            | Error::MaxIterations { .. }
            | Error::IterationLimit
            | Error::NumericalBreakdown(_)
            | Error::DegenerateDiagonal { .. }
            | Error::DuplicateMatch { .. } => ErrorFamily::Numerical,
            Error::Infeasible(_)
            | Error::InsufficientColumns { .. }
            | Error::ZeroNoise
            | Error::TooManyColumns { .. }
            | Error::KSmallerThanR { .. } => ErrorFamily::Infeasible,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
