use alloc::string::String;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller broke an operation's precondition (dimension mismatch,
    /// non-finite input, stepping a terminal state, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Hypervolume requested for more objectives than the exact routine handles.
    #[error("unsupported dimension {dim} (exact hypervolume supports 1..={max})")]
    UnsupportedDimension { dim: usize, max: usize },

    /// An enumeration would exceed its configured cap.
    #[error("enumeration of {size} items exceeds cap {cap}")]
    CapExceeded { size: u128, cap: u128 },

    /// Training produced a non-finite value.
    #[error("non-finite value during training at update {update}: {what}")]
    NonFinite { update: usize, what: String },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! contract {
    ($($arg:tt)*) => {
        $crate::Error::Contract(alloc::format!($($arg)*))
    };
}
pub(crate) use contract;
