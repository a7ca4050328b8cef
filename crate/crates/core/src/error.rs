use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix of {rows}x{cols} exceeds the entry cap of {cap}")]
    Sizing {
        rows: usize,
        cols: usize,
        cap: usize,
    },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("coordinate subset is invalid: {0}")]
    InvalidSubset(String),

    #[error("row {row} is identically zero; facet distance is undefined")]
    DegenerateRow { row: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("walk contract violated: {0}")]
    Contract(String),

    #[error("capacity exceeded: {what} needs {requested} candidates, cap is {cap}")]
    Capacity {
        what: &'static str,
        requested: f64,
        cap: f64,
    },

    #[error(
        "Round-IP gave up after {attempts} edge-walk attempts ({rounds} successful phases, active sizes {phase_sizes:?})"
    )]
    AlgorithmFailure {
        attempts: u32,
        rounds: u32,
        phase_sizes: Vec<usize>,
    },

    #[error("no crossover: feasible fractions never cross 1/2")]
    NoCrossover,

    #[error("unknown {kind} '{name}' (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
