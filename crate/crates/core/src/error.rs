use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("distribution invariant violated: {0}")]
    InvalidDistribution(String),

    #[error("linear program is malformed: {0}")]
    MalformedProgram(String),

    #[error("LP solver failed with status {0}")]
    Solver(String),

    #[error("{stage} is infeasible for gamma = {gamma}")]
    Infeasible { stage: &'static str, gamma: f64 },

    #[error("post-solve verification failed: {0}")]
    Verification(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("hash search exhausted after {attempts} attempts")]
    SearchExhausted { attempts: u64 },

    #[error("hash premise violated at slot {slot}, point {point}: ratio {ratio} > {limit}")]
    PremiseViolated {
        slot: usize,
        point: usize,
        ratio: f64,
        limit: f64,
    },

    #[error("function arity {found} does not match block size {expected}")]
    ArityMismatch { expected: usize, found: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
