use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shift: {0}")]
    InvalidSft(String),

    #[error("word is not allowable: {0}")]
    NotAllowable(String),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("shift is not irreducible")]
    NotIrreducible,

    #[error("no bridge of length <= {0} exists")]
    NoBridge(usize),

    #[error("depth {requested} exceeds available depth {available}")]
    DepthUnavailable { requested: usize, available: usize },

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed document: {0}")]
    Document(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
