use thiserror::Error;

/// Errors produced by ground-set construction, evaluation, optimization and benchmarking.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ground set must contain at least one observation")]
    EmptyGroundSet,

    #[error("evaluation set must contain at least one vector")]
    EmptyEvaluationSet,

    #[error("evaluation batch must contain at least one set")]
    EmptyBatch,

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("index {index} out of range for {what} of length {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error(
        "a single ground vector needs {gamma} bytes but the shared-memory budget per block is {beta} bytes"
    )]
    SharedMemoryOverflow { gamma: usize, beta: usize },

    #[error(
        "out of memory: one evaluation set needs {per_set_bytes} bytes but only {free_bytes} bytes are free; \
         use a lower precision or a larger memory budget"
    )]
    OutOfMemory { per_set_bytes: u64, free_bytes: u64 },

    #[error("dissimilarity returned NaN")]
    NonFiniteDissimilarity,

    #[error("dissimilarity `{used}` does not match `{built_with}` used to build the ground set")]
    DissimilarityMismatch { built_with: String, used: String },

    #[error("budget k = {k} exceeds ground set size n = {n}")]
    BudgetExceedsGroundSet { k: usize, n: usize },

    #[error("exhaustive search over {combinations} subsets exceeds the limit of {limit}")]
    InstanceTooLarge { combinations: u128, limit: u128 },

    #[error("records are not comparable: {0}")]
    IncomparableRecords(String),

    #[error("invalid device limits: {0}")]
    InvalidLimits(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
