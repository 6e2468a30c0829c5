use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("admissibility window violated: {0}")]
    Admissibility(String),
    #[error("inconsistent sequence at packet {j}: {reason}")]
    InconsistentSequence { j: usize, reason: String },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    StepLimit { t: f64 },
    #[error("no sign change of the zone equation below t = {t_max}")]
    NoBracket { t_max: f64 },
    #[error("root refinement did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("series truncated too early: last term is {ratio:e} of the partial sum")]
    InsufficientTerms { ratio: f64 },
    #[error("matrix is singular")]
    Singular,
    #[error("|d_k| = {d} >= 1 at level {level}; raise the zone constant")]
    ZoneConstantTooSmall { level: usize, d: f64 },
    #[error("derivative budget exhausted at level {level}")]
    DerivativeBudget { level: usize },
    #[error("no instability interval in [{lo}, {hi}]")]
    NoInstability { lo: f64, hi: f64 },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
