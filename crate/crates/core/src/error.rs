use thiserror::Error;

/// Errors raised by the gap pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A slope was requested for a vector with zero horizontal component.
    #[error("vertical vector has no finite slope")]
    VerticalVector,

    /// A bounded search ran out before producing the requested number of
    /// items. `partial` holds whatever was found, converted to `f64`.
    #[error("search exhausted: wanted {requested}, found {}", partial.len())]
    Exhausted { requested: usize, partial: Vec<f64> },

    #[error("unsupported query: {0}")]
    Unsupported(String),

    #[error("resource budget exceeded: {0}")]
    Resource(String),

    /// The state carries a short vertical vector, so the horocycle orbit
    /// never reaches the transversal.
    #[error("exceptional point: {0}")]
    Exceptional(String),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors that the CLI maps to the "exhaustion/resource" exit code.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::Exhausted { .. } | Error::Resource(_) | Error::Exceptional(_)
        )
    }
}
