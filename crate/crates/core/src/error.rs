use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {max_dev:.3e} at ({i},{j}))")]
    NotSymmetric { i: usize, j: usize, max_dev: f64 },

    #[error("matrix is not row-stochastic (row {row} sums to {sum})")]
    NotStochastic { row: usize, sum: f64 },

    #[error("negative entry {value} at ({i},{j})")]
    NegativeEntry { i: usize, j: usize, value: f64 },

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("iteration cap exceeded in {0}")]
    IterationLimit(String),

    #[error("eigensolver failed to converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("trajectory cap of {0} steps exceeded")]
    TrajectoryCapExceeded(usize),

    #[error("sample count {got} below required {required}")]
    InsufficientSamples { got: usize, required: usize },

    #[error("no valid cut: universe minus pinned set is empty")]
    NoValidCut,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
