use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("metric is not usable at node ({i}, {j}): {reason}")]
    DegenerateMetric { i: usize, j: usize, reason: String },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("field is not divergence-free: weak divergence residual {residual:e} exceeds {limit:e}")]
    NotDivergenceFree { residual: f64, limit: f64 },

    #[error("basis is rank deficient: {0}")]
    RankDeficient(String),

    #[error("assembled operator is not symmetric: relative asymmetry {0:e}")]
    Asymmetric(f64),

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("ambiguous spectral gap between kernel and range: ratio {ratio:e} < {required:e}; refine the grid")]
    AmbiguousGap { ratio: f64, required: f64 },

    #[error("Killing field leaked into complement: smallest Rayleigh quotient {0:e}")]
    KillingLeak(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time step {dt:e} exceeds the advective stability bound {dt_max:e}")]
    TimeStepTooLarge { dt: f64, dt_max: f64 },

    #[error("step failed at t = {t}: {reason}")]
    StepFailed { t: f64, reason: String },

    #[error("decay fit rejected: {0}")]
    DecayFit(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
