use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ordinal {value} out of range (must be < {bound})")]
    OutOfRange { value: u32, bound: u32 },

    #[error("invalid cardinal profile: {0}")]
    InvalidProfile(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("input is not a chain: {0}")]
    NotAChain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown sort {0}")]
    UnknownSort(usize),

    #[error("pair ({0}, {1}) is not in S; Q is undefined there")]
    NotInS(usize, usize),

    #[error("size cap exceeded: {what} reached {size} (cap {cap})")]
    SizeCap { what: String, size: usize, cap: usize },

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("rejected move: {clause}")]
    RejectedMove { clause: String },

    #[error("strategy stuck: {0}")]
    StrategyStuck(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("tree has no node at level {level} on the required branch")]
    NoNode { level: u32 },

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("move limit {0} exceeded")]
    MoveLimit(usize),

    #[error("scripted move error: {0}")]
    Scripted(String),

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub fn rejected(clause: impl Into<String>) -> Self {
        Error::RejectedMove { clause: clause.into() }
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn cap(what: impl Into<String>, size: usize, cap: usize) -> Self {
        Error::SizeCap { what: what.into(), size, cap }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
