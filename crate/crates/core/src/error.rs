use thiserror::Error;

use crate::expr::ExprError;
use crate::quadrature::NonConvergence;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("quadrature did not converge (estimate {estimate}, error {error})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{what} is not skew-symmetric at t = {t} (defect {defect:e})")]
    NotSkew { what: &'static str, t: f64, defect: f64 },
    #[error("{what} is not symmetric (defect {defect:e})")]
    NotSymmetric { what: &'static str, defect: f64 },
    #[error("step must be positive, got {0}")]
    BadStep(f64),
    #[error("grid too coarse: {points} points, need at least {min}")]
    GridTooCoarse { points: usize, min: usize },
    #[error("time {t} outside path window [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },
    #[error("eigenvalue drift {drift:e} exceeds {limit:e}: not an isospectral path")]
    NotIsospectral { drift: f64, limit: f64 },
    #[error("distinct eigenvalues cross or touch near t = {t} (gap {gap:e})")]
    EigenvalueCrossing { t: f64, gap: f64 },
    #[error("singular matrix at t = {t}")]
    Singular { t: f64 },
    #[error("potential has a pole at t = {t} (cos α = {cos_alpha:e})")]
    Pole { t: f64, cos_alpha: f64 },
    #[error("{0} depends on the velocities")]
    VelocityDependent(String),
    #[error("W-condition fails for the given S (residual {0:e})")]
    WConditionFailed(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<NonConvergence> for Error {
    fn from(e: NonConvergence) -> Self {
        Error::Quadrature { estimate: e.estimate, error: e.error }
    }
}
