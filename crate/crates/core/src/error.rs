use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("horizon must be at least 1")]
    EmptyHorizon,

    #[error("energy total overflows the accumulator")]
    Overflow,

    #[error("vector is not sorted in non-increasing order")]
    NotSorted,

    #[error("invalid transfer {from} -> {to}: source value {from_value} does not exceed destination value {to_value}")]
    InvalidTransfer {
        from: usize,
        to: usize,
        from_value: u64,
        to_value: u64,
    },

    #[error("transfer index out of range: {0}")]
    TransferOutOfRange(usize),

    #[error("the source vector does not majorize the target")]
    NotMajorizing,

    #[error("service {index} is infeasible: E={energy}, m={rate}, horizon {horizon}")]
    InfeasibleService {
        index: usize,
        energy: u64,
        rate: u64,
        horizon: usize,
    },

    #[error("allocation is infeasible for service (E={energy}, m={rate}): {reason}")]
    InfeasibleAllocation {
        energy: u64,
        rate: u64,
        reason: String,
    },

    #[error("demand-duration vector is not non-increasing at slot {0}")]
    NotNonIncreasing(usize),

    #[error("supply is inadequate: tail deficit starting at slot {tail_index}, unmet rows {unmet_rows:?}")]
    Inadequate {
        /// 1-based slot where the worst tail deficit starts.
        tail_index: usize,
        unmet_rows: Vec<usize>,
    },

    #[error("invalid scenario set: {0}")]
    InvalidScenarios(String),

    #[error("invalid market model: {0}")]
    InvalidMarket(String),

    #[error("invalid decision point: {0}")]
    InvalidDecision(String),

    #[error("missing optimizer caps (d_max and y_max are required)")]
    MissingCaps,

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("instance exceeds oracle bounds: {0}")]
    BoundsExceeded(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("parse error: {0}")]
    Parse(String),
}
