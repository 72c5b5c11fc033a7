use thiserror::Error;

/// Errors raised by the symbolic and numeric layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("not simple alternant: {0}")]
    NotSimpleAlternant(String),

    #[error("not in Large normal form: {0}")]
    NotNormalForm(String),

    #[error("not representable exactly: {0}")]
    NotRepresentable(String),

    #[error("unsupported word: {0}")]
    UnsupportedWord(String),

    #[error("outside the unit-scale regime: {0}")]
    OutsideRegime(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("precision insufficient: {0}")]
    PrecisionInsufficient(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
