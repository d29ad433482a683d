use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field is not radial")]
    NotRadial,
    #[error("singular linear system in {0}")]
    Singular(&'static str),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("no contraction: discrete operator norm {0:.4} >= 1")]
    NoContraction(f64),
    #[error("iteration did not converge after {iters} steps (last difference {last_diff:.3e})")]
    NoConvergence { iters: usize, last_diff: f64 },
    #[error("need at least {need} snapshots, got {got}")]
    TooFewSnapshots { need: usize, got: usize },
}

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Param { name, reason: reason.into() }
}
