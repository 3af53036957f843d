use alloc::string::String;

/// Construction and validation failures for problems, losses, and selection
/// procedures. Numerical trouble inside the path solver is not an error — it
/// is reported through [`crate::path::PathStatus`] so the partial path
/// survives.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("problem has no observations or no features")]
    Empty,

    #[error("classification response must be -1 or +1 (row {row} is {value})")]
    BadLabel { row: usize, value: f64 },

    #[error("group {group} has {count} members with nonzero constraint weight; at least 2 are required")]
    GroupTooSmall { group: usize, count: usize },

    #[error("group sizes must be positive and sum to the number of features")]
    GroupCoverage,

    #[error("invalid loss specification: {0}")]
    InvalidLoss(String),

    #[error("unknown loss name `{0}`")]
    UnknownLoss(String),

    #[error("loss parameter out of range: {0}")]
    LossParameter(String),

    #[error("invalid argument: {0}")]
    BadArgument(String),
}
