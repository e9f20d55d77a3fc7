use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("price series is empty")]
    EmptySeries,

    #[error("series have no dates in common")]
    EmptyIntersection,

    #[error("series too short: {len} observation(s), need at least {min}")]
    TooShortSeries { len: usize, min: usize },

    #[error("series dates do not match")]
    DateMismatch,

    #[error("series frequencies do not match: {0} vs {1}")]
    FrequencyMismatch(String, String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid portfolio weights ({w1}, {w2}): need w1, w2 in (0,1) with w1 + w2 = 1")]
    InvalidWeights { w1: f64, w2: f64 },

    #[error("invalid probability level {0}: need 0 < p < 1")]
    InvalidProbability(f64),

    #[error("invalid correlation {0}: need -1 <= rho <= 1")]
    InvalidCorrelation(f64),

    #[error("unsupported waiting period: {period} at {frequency} frequency")]
    UnsupportedCombination { frequency: String, period: String },

    #[error("insufficient sample: {n} observation(s) cannot support quantile level {q}")]
    InsufficientSample { n: usize, q: f64 },

    #[error("mismatched VaR inputs: {0}")]
    MismatchedInputs(String),

    #[error("degenerate VaR: individual VaR values must be positive (got {v1}, {v2})")]
    DegenerateVar { v1: f64, v2: f64 },

    #[error("series {0} is constant")]
    ConstantSeries(String),

    #[error("invalid generator config: {0}")]
    InvalidConfig(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("duplicate grid point {0}")]
    DuplicateGridPoint(String),

    #[error("grid point {point}: {source}")]
    GridPoint {
        point: String,
        #[source]
        source: Box<Error>,
    },
}
