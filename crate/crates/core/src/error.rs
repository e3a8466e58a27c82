use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {detail}")]
    Parameter { name: &'static str, detail: String },

    #[error("insufficient resolution: box holds {found} lattice planes on some axis, need {required}")]
    InsufficientResolution { found: usize, required: usize },

    #[error("non-finite value {value} at {coords:?}")]
    Sampling { coords: Vec<f64>, value: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("order violation: {0}")]
    Order(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        detail: detail.into(),
    }
}
