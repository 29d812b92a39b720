use thiserror::Error;

/// Errors raised by the spectrum workbench.
///
/// `Infeasible` is kept separate from the validation variants because callers
/// (the command-line front-end in particular) treat an exhausted evaluation
/// budget differently from a malformed input.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be in 2..=256, got {0}")]
    Alphabet(usize),

    #[error("transition matrix is not primitive")]
    NotPrimitive,

    #[error("inadmissible word: {0}")]
    InadmissibleWord(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible: {needed} word evaluations exceed budget {budget}")]
    Infeasible { needed: u128, budget: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unconverged: {0}")]
    Unconverged(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
