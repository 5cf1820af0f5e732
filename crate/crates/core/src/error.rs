use thiserror::Error;

/// Errors raised by the solver and its verification harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("x-grid is not uniform on the torus: {0}")]
    NonUniformXGrid(String),

    #[error("reality condition violated at mode {alpha}: defect {defect:e}")]
    RealityViolated { alpha: i64, defect: f64 },

    #[error("z-differentiation needs at least {need} nodes, grid has {have}")]
    TooFewNodes { need: usize, have: usize },

    #[error("mode 0 has no stream function; use the zero-mode velocity branch")]
    ZeroMode,

    #[error("lambda = {re}{im:+}i lies on the branch cut (-inf, {cut_tip}]")]
    BranchCut { re: f64, im: f64, cut_tip: f64 },

    #[error("resolvent denominator vanishes near lambda = {re}{im:+}i with a nonzero numerator")]
    NearPole { re: f64, im: f64 },

    #[error("inadmissible contour: {0}")]
    InvalidContour(String),

    #[error("{what} did not converge: estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    NotConverged {
        what: &'static str,
        estimate: f64,
        tolerance: f64,
    },

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error(
        "Picard iteration did not contract within {iterations} iterations \
         (last relative update {last_delta:e}, dt = {dt}); reduce the step size"
    )]
    PicardDivergence {
        iterations: usize,
        last_delta: f64,
        dt: f64,
    },

    #[error("spectral tail carries {fraction:e} of the analytic norm (limit {limit:e})")]
    SpectralTail { fraction: f64, limit: f64 },

    #[error("analyticity radius rho0 - gamma*t = {radius} is exhausted at t = {t}")]
    RadiusExhausted { radius: f64, t: f64 },

    #[error("exponential weight overflow: rho*K = {0} exceeds 600")]
    OverflowGuard(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("kernel cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
