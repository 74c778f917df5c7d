use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("timestamp decreases on line {line}")]
    Ordering { line: usize },

    #[error("trace needs at least 2 samples, got {0}")]
    TraceTooShort(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no step falls strictly inside the threshold band; re-collect the trace")]
    NoSyncPoint,

    #[error("sync index {sync_index} leaves {available} points, window needs {needed}")]
    InsufficientTail {
        sync_index: usize,
        needed: usize,
        available: usize,
    },

    #[error("transform length {0} is not a power of two")]
    FftSize(usize),

    #[error("non-finite magnitude at element {0}")]
    NonFinite(usize),

    #[error("secret is empty")]
    EmptySecret,

    #[error("input bit sequence is empty")]
    EmptyInput,

    #[error("invalid bit string: {0}")]
    InvalidBits(String),

    #[error("plaintext is empty")]
    EmptyPlaintext,

    #[error("malformed ciphertext: {0}")]
    CiphertextFormat(String),

    #[error("decryption failed: wrong key or corrupted ciphertext")]
    Decrypt,

    #[error("random number generator failure: {0}")]
    Rng(String),

    #[error("payload needs {needed_bits} bits but the carrier holds {available_bits}")]
    Capacity {
        needed_bits: usize,
        available_bits: usize,
    },

    #[error("malformed stego image: {0}")]
    StegoFormat(String),

    #[error("invalid key file: {0}")]
    KeyFormat(String),

    #[error("invalid simulation model: {0}")]
    InvalidModel(String),

    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
}
