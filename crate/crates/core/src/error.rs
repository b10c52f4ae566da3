use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed model spec at `{token}`: {reason}")]
    Spec { token: String, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },

    #[error("model outside the φ(γ) < 1 regime: {0}")]
    Regime(String),

    #[error("quadrature did not converge: achieved {achieved:e}, target {target:e}")]
    Quadrature { achieved: f64, target: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("span too small: folded mass {folded:e} exceeds {limit:e}")]
    Fold { folded: f64, limit: f64 },

    #[error("grid step mismatch: {0} vs {1}")]
    StepMismatch(f64, f64),

    #[error("walk drift is not negative (mean {0})")]
    Drift(f64),

    #[error("no convergence after {iterations} iterations (last change {delta:e})")]
    NoConvergence { iterations: usize, delta: f64 },

    #[error("horizon exhausted with residual mass {residual:e}")]
    Horizon { residual: f64 },

    #[error("truncation not certified: {0}")]
    Uncertified(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
