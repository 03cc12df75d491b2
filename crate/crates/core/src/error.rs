use thiserror::Error;

use crate::algebra::AtomId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Input violates a structural invariant.
    #[error("invalid structure: {0}")]
    Invalid(String),
    #[error("unknown atom {0}")]
    UnknownAtom(AtomId),
    #[error("subalgebras or systems do not share one ambient algebra")]
    MismatchedAmbient,
    #[error("systems carry {left} and {right} partial maps")]
    ArityMismatch { left: usize, right: usize },
    #[error("not an embedding: {0}")]
    NotEmbedding(String),
    #[error("system is not normal: {0}")]
    NotNormal(String),
    #[error("inputs disagree on the shared part: {0}")]
    Disagreement(String),
    #[error("measure not preserved: {0}")]
    NotMeasurePreserving(String),
    #[error("non-dyadic mass {0} produced from dyadic inputs")]
    NonDyadic(String),
    #[error("not a full equal-mass system: {0}")]
    NotFull(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unsupported by this driver: {0}")]
    Unsupported(String),
    /// An internal certificate failed; this is a bug, not bad input.
    #[error("internal defect: {0}")]
    Defect(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn defect(msg: impl Into<String>) -> Self {
        Error::Defect(msg.into())
    }
}
