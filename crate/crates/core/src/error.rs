use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A quadrature did not settle: the integral is (numerically) infinite.
    #[error("integral diverges: {0}")]
    Divergent(String),
    #[error("integrand returned NaN at {0}")]
    InvalidIntegrand(String),
    #[error("operation not defined for a {found} measure (expected {expected})")]
    DomainMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("measure has zero total mass")]
    EmptyMeasure,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("variance routes disagree at n = {n}: {detail}")]
    MethodDisagreement { n: u64, detail: String },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("sigma^2 is infinite, var(S_n)/n has no finite limit")]
    SigmaInfinite,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("theta = integral of 1/(1-|x|) against the base measure is infinite")]
    ThetaInfinite,
    #[error("no sign change in bracket [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("walk exceeded {0} steps without reaching the boundary")]
    StepLimit(u64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
