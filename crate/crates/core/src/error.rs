use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("matrix not positive definite: eigenvalue {value:e} at index {index}")]
    NotPositiveDefinite { index: usize, value: f64 },
    #[error("degenerate border component |v_{index}| = {modulus:e} at level {level}")]
    DegenerateBorder { level: usize, index: usize, modulus: f64 },
    #[error("chart undefined: minor ({i},{k}) vanishes")]
    VanishingMinor { i: usize, k: usize },
    #[error("flow left H_0 at time {time} (gap {gap:e})")]
    FlowDegenerate { time: f64, gap: f64 },
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("finite differences disagree: {0}")]
    StepSize(String),
    #[error("scale error: t*max|lambda| = {0} exceeds 600")]
    Scale(f64),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("regression is rank deficient: {0}")]
    RankDeficient(String),
}

pub type Result<T> = std::result::Result<T, Error>;
