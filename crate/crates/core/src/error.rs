use thiserror::Error;

pub type Result<T> = std::result::Result<T, NucavError>;

#[derive(Debug, Error)]
pub enum NucavError {
    /// Every violated invariant found while validating a stack document.
    #[error("invalid stack configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("could not parse stack document: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("z = {z} nm lies outside the evaluation window [{lo}, {hi}] nm")]
    OutsideWindow { z: f64, lo: f64, hi: f64 },

    #[error("stack has no resonant layers")]
    NoResonantLayers,

    #[error("few-mode pole: alpha^2 coincides with (lambda*pi)^2 for lambda = {lambda} (relative gap {gap:e})")]
    SingularMode { lambda: u32, gap: f64 },

    #[error("stack is not a few-mode cavity: {0}")]
    FewModeGeometry(String),

    #[error("fit did not converge after {iterations} iterations (cost {cost:e}, last relative decrease {rel_decrease:e})")]
    FitFailed {
        iterations: usize,
        cost: f64,
        rel_decrease: f64,
    },

    #[error("no local minima found")]
    NoMinima,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
