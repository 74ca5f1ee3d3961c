//! Error type shared across the library, with a stable mapping to process
//! exit codes for the CLI.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration file or flag combination is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numerical or logical failure at run time (NaN, divergence guard,
    /// shape mismatch between tensors, ...).
    #[error("runtime failure: {0}")]
    Runtime(String),

    /// Filesystem trouble while reading inputs or writing artifacts.
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    /// A remote denoiser endpoint misbehaved (transport or protocol).
    #[error("remote denoiser failure: {0}")]
    Remote(String),

    /// JSON (de)serialization failure; classified as config trouble because
    /// it is always triggered by user-provided files.
    #[error("invalid configuration: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for this error.
    ///
    /// `0` success, `2` CLI usage (handled by the argument parser), `3`
    /// invalid configuration, `4` runtime failure, `5` i/o failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 3,
            Error::Runtime(_) | Error::Remote(_) => 4,
            Error::Io(_) => 5,
        }
    }

    /// Shorthand constructor for configuration errors.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Shorthand constructor for runtime errors.
    pub fn runtime(msg: impl Into<String>) -> Self {
        Error::Runtime(msg.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(Error::config("x").exit_code(), 3);
        assert_eq!(Error::runtime("x").exit_code(), 4);
        let io = Error::from(std::io::Error::new(std::io::ErrorKind::NotFound, "gone"));
        assert_eq!(io.exit_code(), 5);
        assert_eq!(Error::Remote("down".into()).exit_code(), 4);
        let json: Error = serde_json::from_str::<i32>("not json").unwrap_err().into();
        assert_eq!(json.exit_code(), 3);
    }
}
