use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size must be even (got {0})")]
    OddGrid(usize),
    #[error("grid size must be at least 16 (got {0})")]
    GridTooSmall(usize),
    #[error("angular mode k must be at least 1 (got {0})")]
    InvalidMode(i64),
    #[error("cusp has no quadratic well")]
    NoQuadraticWell,
    #[error("argument {0} outside the supported range [-20, 20]")]
    OutOfRange(f64),
    #[error("zero index {0} outside 1..=10")]
    ZeroIndex(usize),
    #[error("no sign change bracketing {which} zero #{index} in [{lo}, {hi}]")]
    Bracket {
        which: &'static str,
        index: usize,
        lo: f64,
        hi: f64,
    },
    #[error("under-resolved grid: h = {h:.3e} exceeds {limit:.3e}")]
    UnderResolved { h: f64, limit: f64 },
    #[error("grid mismatch: {0} points vs {1}")]
    GridMismatch(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigensolver did not converge after {iterations} Lanczos steps ({converged}/{wanted} pairs, worst residual/tolerance {worst_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        converged: usize,
        wanted: usize,
        worst_residual: f64,
    },
    #[error("evolution invariant violated at t = {time:.6}: {what}")]
    Invariant { time: f64, what: String },
    #[error("phase unwrap failed at sample {sample}: jump {jump:.3} rad is not below pi")]
    Unwrap { sample: usize, jump: f64 },
    #[error("amplitude too large: predicted depletion {0:.3e} exceeds 1e-2")]
    Depletion(f64),
    #[error("degenerate perturbation: eps/a1 = {0:.3e} is below 1e-12")]
    DegenerateEpsilon(f64),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
