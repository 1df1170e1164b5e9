use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by front ends to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorFamily {
    Input,
    Spectral,
    Geometry,
    Convergence,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular matrix")]
    SingularMatrix,

    #[error("Newton iteration did not converge after {iterations} iterations (|b| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("iterate left the enclosing region U")]
    OutsideDomain,
    #[error(
        "leading eigenvalue is not simple, real and positive with a strictly dominant real part: {0}"
    )]
    LeadingEigenvalueNotSimpleReal(String),
    #[error("eigen-decomposition failed: {0}")]
    EigenFailure(String),

    #[error("start point is not in the interior of the region")]
    NotInterior,
    #[error("trajectory left the enclosing region U before the exit was resolved")]
    LeftEnclosure,
    #[error("bisection could not bracket the boundary crossing")]
    StepTooLarge,
    #[error("Π_v threshold {delta:e} not reached before leaving G")]
    NoCrossing { delta: f64 },
    #[error("unstable curve does not leave G within t_max = {t_max}")]
    NoExit { t_max: f64 },
    #[error("unstable curve meets the boundary tangentially (|<∇g, b>| = {transversality:e})")]
    TangentialIntersection { transversality: f64 },
    #[error("h table does not decay linearly in δ (difference ratio {ratio:.3} at k = {index})")]
    NonmonotoneTable { index: usize, ratio: f64 },

    #[error("no exit before t_cap = {t_cap}")]
    NoExitByCap { t_cap: f64 },
    #[error("state became non-finite or left U at t = {t}")]
    NonFinite { t: f64 },

    #[error("start point is not on the stable manifold (|S^T x| = {residual:e} after T = {horizon})")]
    NotOnStableManifold { residual: f64, horizon: f64 },
    #[error("adjoint variance not converged under horizon doubling (relative change {change:e})")]
    TailNotConverged { change: f64 },

    #[error("too few samples: {side} side has {got}, need {need}")]
    TooFewSamples { side: &'static str, got: usize, need: usize },
}

impl Error {
    pub fn family(&self) -> ErrorFamily {
        use Error::*;
        match self {
            InvalidInput(_) | DimensionMismatch { .. } | NotInterior => ErrorFamily::Input,
            LeadingEigenvalueNotSimpleReal(_) | EigenFailure(_) | SingularMatrix => {
                ErrorFamily::Spectral
            }
            OutsideDomain
            | LeftEnclosure
            | NoCrossing { .. }
            | NoExit { .. }
            | TangentialIntersection { .. }
            | NotOnStableManifold { .. } => ErrorFamily::Geometry,
            NoConvergence { .. }
            | StepTooLarge
            | NonmonotoneTable { .. }
            | NoExitByCap { .. }
            | NonFinite { .. }
            | TailNotConverged { .. }
            | TooFewSamples { .. } => ErrorFamily::Convergence,
        }
    }
}
