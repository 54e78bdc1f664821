use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A*| entry {defect:e})")]
    NonHermitianInput { defect: f64 },

    #[error("Jacobi diagonalization did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    ConvergenceFailure { sweeps: usize, off_norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("operator is not positive (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("malformed observable: {0}")]
    Malformed(String),

    #[error("{count} outcomes exceed the configured cap of {cap}")]
    TooManyOutcomes { count: usize, cap: usize },

    #[error("projections {first} and {second} do not commute")]
    NonCommuting { first: usize, second: usize },

    #[error("generator {index} is not a projection")]
    NotProjection { index: usize },

    #[error("Boolean algebra would exceed {limit} elements")]
    AlgebraTooLarge { limit: usize },

    #[error("atomic decomposition failed: {0}")]
    DecompositionDefect(String),

    #[error("power-set certificate failed: {0}")]
    CertificateFailure(String),

    #[error("R1 is not a Boolean set system")]
    NotBoolean,

    #[error("R1 atoms do not partition the outcome set")]
    AtomCoverFailure,

    #[error("search budget of {budget} nodes exhausted before completion")]
    SearchBudgetExceeded { budget: u64 },

    #[error("observable is not scalar (space dimension {dim})")]
    NotScalar { dim: usize },

    #[error("weight {weight} has no rational approximation with denominator <= {bound}")]
    NotRational { weight: f64, bound: i64 },

    #[error("common denominator {denominator} exceeds the bound {bound}")]
    DenominatorOverflow { denominator: i128, bound: i64 },
}

pub type Result<T> = std::result::Result<T, Error>;
