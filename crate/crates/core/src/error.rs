use std::io;

/// Errors produced anywhere in the crate.
///
/// The variants follow the failure classes callers need to tell apart:
/// bad arguments, values outside a mathematical domain, malformed bytes,
/// protocol violations by a peer, and decoder budget overruns.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("decoding failure: no codeword within the error/erasure budget")]
    DecodingFailure,
    #[error("no unconsumed audits left in the token bundle")]
    TokensExhausted,
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}
