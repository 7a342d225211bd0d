use thiserror::Error;

/// Errors raised while constructing or evaluating mechanisms.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// A mechanism parameter is outside its admissible range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The pair `(i1, i2)` does not index an elementary pmf for this count.
    #[error("invalid elementary index (i1={i1}, i2={i2}) for n={n}, D={d}: need i1 in [-{a}:-1], i2 in [1:{d}]")]
    InvalidElementaryIndex {
        i1: i64,
        i2: i64,
        n: u64,
        d: u64,
        a: u64,
    },

    /// Pmfs passed to a mixture disagree on `n`, `eta` or `D`.
    #[error("mismatched pmfs: {0}")]
    MismatchedPmfs(String),

    /// Mixture weights are not a probability vector.
    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    /// True count outside `[1:N]`.
    #[error("count n={n} outside [1:{max}]")]
    CountOutOfRange { n: u64, max: u64 },

    /// A pmf cannot be used for the requested operation.
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    /// A mechanism matrix is malformed.
    #[error("invalid mechanism matrix: {0}")]
    InvalidMatrix(String),

    /// The general LP would exceed the variable budget of the oracle.
    #[error("general LP needs {variables} variables, budget is {budget}")]
    BudgetExceeded { variables: usize, budget: usize },

    /// Discrete Gaussian variance must be positive and finite.
    #[error("invalid variance parameter {0}")]
    InvalidVariance(f64),

    /// Sweep grid is malformed.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
