use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} values, found {found}")]
    InconsistentDimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse {literal:?} as a number")]
    ParseNumber { line: usize, literal: String },
    #[error("line {line}: non-finite entry {literal:?}")]
    NonFiniteEntry { line: usize, literal: String },
    #[error("line {line}: duplicate token {token:?}")]
    DuplicateToken { line: usize, token: String },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("corrupt binary cache: {0}")]
    CorruptCache(String),
    #[error("rows with zero norm: {rows:?}")]
    ZeroNormRow { rows: Vec<usize> },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("need more samples than dimensions (n = {n}, d = {d})")]
    NotEnoughSamples { n: usize, d: usize },
    #[error("rank deficient: eigenvalue {value:e} below floor {floor:e}")]
    RankDeficient { value: f64, floor: f64 },
    #[error("input is not whitened (covariance deviates from identity by {deviation:e})")]
    NotWhitened { deviation: f64 },
    #[error("column {column} has zero variance")]
    DegenerateColumn { column: usize },
    #[error("tour is not anchored")]
    TourNotAnchored,
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("exact solver supports at most {max} axes, got {d}")]
    TooManyAxes { d: usize, max: usize },
    #[error("show set is empty")]
    EmptyShowSet,
    #[error("rank correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
