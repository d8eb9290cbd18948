use alloc::string::String;

/// Errors produced by the estimator and its building blocks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// The constraint set is degenerate or malformed.
    #[error("invalid constraint set: {0}")]
    InvalidSet(String),

    /// A numeric parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Vector or matrix dimensions do not agree.
    #[error("shape mismatch: expected dimension {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    /// A net would exceed the configured point cap.
    #[error(
        "net would need {required} points but the cap is {cap}; raise the cap to at least \
         {required} or use zeta >= {suggested_zeta}"
    )]
    Capacity {
        required: u64,
        cap: u64,
        suggested_zeta: f64,
    },

    /// The requested moment of the design distribution is infinite.
    #[error("moment of order {order} does not exist for {family}")]
    MomentRefused { order: f64, family: String },

    /// The operation is not available for this model.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An audit pair does not differ in exactly one record.
    #[error("pair {pair} is not a neighboring pair: {reason}")]
    NotNeighbors { pair: usize, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
