use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the region where the quantity is defined.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("invalid constants config: {0}")]
    Config(String),

    /// Requested work would exceed the configured memory guard.
    #[error("budget of {requested} bytes exceeds memory guard of {limit} bytes")]
    Budget { requested: u64, limit: u64 },

    #[error("net for k = {k} is not enumerable in certified mode")]
    Uncertified { k: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain { op, msg: msg.into() }
}
