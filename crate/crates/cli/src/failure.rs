use std::fmt;
use std::path::Path;

use gyrosecret_core::Error;

/// Process exit codes.
pub mod code {
    pub const OK: u8 = 0;
    /// Bad flags or arguments (also what clap uses).
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    /// Malformed input file contents.
    pub const FORMAT: u8 = 4;
    /// Sync, extraction or simulation could not produce a result.
    pub const PIPELINE: u8 = 5;
    /// Key derivation, encryption, decryption or carrier failure.
    pub const CRYPTO: u8 = 6;
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: code::USAGE,
            message: message.into(),
        }
    }

    pub fn format(message: impl Into<String>) -> Self {
        Self {
            code: code::FORMAT,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self {
            code: code::IO,
            message: format!("{}: {err}", path.display()),
        }
    }

    pub fn in_file(path: &Path, err: Error) -> Self {
        let mut f = Failure::from(err);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::Parse { .. }
            | Error::Ordering { .. }
            | Error::TraceTooShort(_)
            | Error::InvalidBits(_)
            | Error::KeyFormat(_)
            | Error::CiphertextFormat(_)
            | Error::StegoFormat(_) => code::FORMAT,
            Error::InvalidConfig(_) | Error::UnknownParameter(_) | Error::FftSize(_) => code::USAGE,
            Error::InsufficientData { .. }
            | Error::NoSyncPoint
            | Error::InsufficientTail { .. }
            | Error::NonFinite(_)
            | Error::EmptySecret
            | Error::EmptyInput
            | Error::InvalidModel(_) => code::PIPELINE,
            Error::EmptyPlaintext | Error::Decrypt | Error::Rng(_) | Error::Capacity { .. } => {
                code::CRYPTO
            }
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

pub type Outcome<T = ()> = std::result::Result<T, Failure>;
