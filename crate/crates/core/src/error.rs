use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite sample at {at:?}")]
    NonFinite { at: Vec<f64> },
    #[error("phi_p is undefined for negative argument {0}")]
    NegativeArgument(f64),
    #[error("no Luxemburg bracket after {expansions} expansions; function not in L^p(x) at this resolution")]
    BracketNotFound { expansions: usize },
    #[error("empty probe grid")]
    EmptyProbeGrid,
    #[error("incompatible class specification: {0}")]
    IncompatibleSpec(String),
    #[error("exponent mismatch: {0}")]
    ExponentMismatch(String),
    #[error("function `{0}` has no declared sup bound")]
    MissingSupBound(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("boundedness verdicts disagree: weyl bounded = {weyl}, stepanov bounded = {stepanov}")]
    VerdictMismatch { weyl: bool, stepanov: bool },
    #[error("lattice truncation too coarse: tail estimate {tail:e} exceeds slack {slack:e}")]
    TruncationTooCoarse { tail: f64, slack: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
