use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Every variant is a data error from the caller's point of view: bad
/// input files, inputs that violate an operation's preconditions, or
/// numerically degenerate instances.
#[derive(Debug, Error)]
pub enum Error {
    #[error("utterance {id}: {len_phonemes} phonemes but {len_durations} durations")]
    LengthMismatch {
        id: String,
        len_phonemes: usize,
        len_durations: usize,
    },

    #[error("utterance {id}: negative duration {value} at position {position}")]
    NegativeDuration { id: String, position: usize, value: i64 },

    #[error("unknown phoneme {0:?}")]
    UnknownPhoneme(String),

    #[error("unknown phoneme id {0}")]
    UnknownPhonemeId(usize),

    #[error("invalid inventory: {0}")]
    InvalidInventory(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible alignment: {0}")]
    Infeasible(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty after silence trimming")]
    EmptyAfterTrim,

    #[error("phoneme sequence mismatch for utterance {0}")]
    SequenceMismatch(String),

    #[error("phoneme {0:?} never occurs in the training corpus")]
    UnseenPhoneme(String),

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: byte offset {offset}: {message}")]
    Binary {
        path: String,
        offset: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
