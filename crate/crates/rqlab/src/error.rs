use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("m = {0} is not squarefree")]
    NotSquarefree(u64),
    #[error("m must be >= 2")]
    MTooSmall,
    #[error("discriminant {0} is not a fundamental discriminant")]
    NotFundamental(u64),
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("p = {0} ramifies in the field")]
    Ramified(u64),
    #[error("p = {0} does not split in the field")]
    NotSplit(u64),
    #[error("cannot factor {0} with u64 arithmetic")]
    CannotFactor(String),
    #[error("element is not coprime to p = {0}")]
    NotCoprime(u64),
    #[error("p-adic precision exhausted at p^{0}")]
    PrecisionExhausted(u32),
    #[error("generator search failed: {0}")]
    GeneratorSearchFailed(String),
    #[error("p-part of the class group is not cyclic (rank {0})")]
    NonCyclicPPart(usize),
    #[error("prime pool is empty for the given bound")]
    EmptyPool,
    #[error("ray class structure did not stabilize below the precision cap")]
    NotSaturated,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable tag for one-line JSON error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotSquarefree(_) => "NotSquarefree",
            Error::MTooSmall => "MTooSmall",
            Error::NotFundamental(_) => "NotFundamental",
            Error::FieldMismatch => "FieldMismatch",
            Error::Ramified(_) => "Ramified",
            Error::NotSplit(_) => "NotSplit",
            Error::CannotFactor(_) => "CannotFactor",
            Error::NotCoprime(_) => "NotCoprime",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::GeneratorSearchFailed(_) => "GeneratorSearchFailed",
            Error::NonCyclicPPart(_) => "NonCyclicPPart",
            Error::EmptyPool => "EmptyPool",
            Error::NotSaturated => "NotSaturated",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
