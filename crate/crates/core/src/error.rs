use alloc::string::String;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Grid, mask or vector dimensions do not agree.
    #[error("size error: {0}")]
    Size(String),
    /// A parameter is outside its valid domain.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// An operation was invoked on state that is not ready for it.
    #[error("state error: {0}")]
    State(String),
    /// Non-finite values appeared during optimization.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A caller-supplied closure broke its contract (e.g. non-determinism).
    #[error("contract error: {0}")]
    Contract(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! size_err {
    ($($arg:tt)*) => { $crate::error::Error::Size(alloc::format!($($arg)*)) };
}
macro_rules! param_err {
    ($($arg:tt)*) => { $crate::error::Error::Parameter(alloc::format!($($arg)*)) };
}
pub(crate) use param_err;
pub(crate) use size_err;
