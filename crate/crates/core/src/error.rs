use thiserror::Error;

/// Errors produced by the solvers, the ansatz machinery and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("Hermitian symmetry violated (relative defect {defect:e})")]
    Symmetry { defect: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nonzero mean mode: |c_0| = {0:e}")]
    ZeroMode(f64),

    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("resonant denominator {denominator:e} at k = {k}, m = {m}")]
    Resonance { denominator: f64, k: f64, m: f64 },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("envelope is stale: expected slow time {expected}, found {found}")]
    StaleEnvelope { expected: f64, found: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
