use thiserror::Error;

/// Errors produced by the analyses in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("level {index} is out of range for a space of dimension {dim}")]
    OutOfRange { index: usize, dim: usize },

    #[error(
        "truncation too small: neglected tail mass {tail_mass:.3e} >= {tail_tol:.1e}, \
         need dim >= {required_dim}"
    )]
    TruncationTooSmall {
        tail_mass: f64,
        tail_tol: f64,
        required_dim: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "state carries weight {weight:.3e} on the top {levels} truncation levels; \
         enlarge the space"
    )]
    TruncationContaminated { weight: f64, levels: usize },

    #[error("Mandel Q is undefined for the vacuum (<n> = 0)")]
    UndefinedForVacuum,

    #[error("steady state is not unique (null space dimension > 1)")]
    NonUniqueSteadyState,

    #[error("emission rate is zero; g2 normalization is undefined")]
    NormalizationUndefined,

    #[error("integration needs {steps} steps, above the limit of {limit}")]
    StepOverflow { steps: u64, limit: u64 },

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("point is not on the probability simplex: {0}")]
    OffSimplex(String),

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("measure grid is empty")]
    EmptyGrid,

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
