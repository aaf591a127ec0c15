use thiserror::Error;

/// Errors raised by dataset ingestion, the codecs and spec persistence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing field `{field}` at line {line}")]
    MissingField { line: usize, field: &'static str },

    #[error("validation error at line {line}: field `{field}`: {message}")]
    Validation {
        line: usize,
        field: &'static str,
        message: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric parse error at offset {offset}: {message}")]
    NumericParse { offset: usize, message: String },

    #[error("arity error: expected {expected} tokens, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("decode range error: {0}")]
    DecodeRange(String),

    #[error("malformed token `{0}`")]
    MalformedToken(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid date: {0}")]
    InvalidDate(String),

    #[error("level order error: expected level {expected}, found `{token}`")]
    LevelOrder { expected: usize, token: String },

    #[error("token index {index} out of range for {what} of size {size}")]
    IndexOutOfRange {
        what: String,
        index: usize,
        size: usize,
    },

    #[error("grammar error at token offset {offset}: {message}")]
    Grammar { offset: usize, message: String },

    #[error("event {index}: {source}")]
    AtEvent {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unfitted spec: {0}")]
    Unfitted(String),

    #[error("version mismatch: file has version `{found}`, this build reads `{expected}`")]
    VersionMismatch { found: String, expected: String },

    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    ChecksumMismatch { stored: String, computed: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("unit mismatch: spec was fit with unit `{spec}`, dataset uses `{dataset}`")]
    UnitMismatch { spec: String, dataset: String },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_event(self, index: usize) -> Self {
        Error::AtEvent {
            index,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input data rather than a bug or I/O failure.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Internal(_))
    }
}
