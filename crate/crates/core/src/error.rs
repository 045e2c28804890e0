use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A frame or experiment configuration is internally inconsistent.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// The interference-suppressing transmission scheme cannot serve any
    /// user under the given tap lengths; callers should fall back to the
    /// TDMA-OFDM baseline instead.
    #[error("scheme inapplicable: {0}")]
    SchemeInapplicable(String),

    /// The effective channel matrix of a user fell below the numeric rank
    /// threshold, so its streams cannot be separated.
    #[error("decode failure for user {user}: effective channel matrix is numerically singular")]
    DecodeFailure { user: usize },

    /// File output failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
