use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cannot solve alpha(1 - alpha r)^2 = mu at endpoint {end}: mu = {mu} exceeds 4/(27 r) = {limit}")]
    UnsolvableAlpha { end: &'static str, mu: f64, limit: f64 },
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("quadrature did not reach tolerance {tol:e} (last change {delta:e} with {panels} panels)")]
    QuadratureFailure { tol: f64, delta: f64, panels: usize },
    #[error("function has no derivative rule of order {order}")]
    NotDifferentiable { order: u32 },
    #[error("no sign change found in [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("invalid limit: {0}")]
    InvalidLimit(String),
    #[error("cutoff mismatch: {left} vs {right}")]
    CutoffMismatch { left: usize, right: usize },
    #[error("N_max = {nmax} leaves a coherent-state tail of {tail:e} above tolerance {tol:e}")]
    TruncationTooTight { nmax: usize, tail: f64, tol: f64 },
    #[error("boundary trace of the one-particle vector vanishes")]
    TraceVanishes,
    #[error("embedding is not space-like at sigma = {sigma}")]
    NotSpacelike { sigma: f64 },
    #[error("non-finite state at s = {s}")]
    StepFailure { s: f64 },
    #[error("trajectory does not cross t = {tau}")]
    NoCrossing { tau: f64 },
}

impl Error {
    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::UnsolvableAlpha { .. }
                | Error::Parse { .. }
                | Error::InvalidLimit(_)
                | Error::CutoffMismatch { .. }
                | Error::NotSpacelike { .. }
        )
    }
}
