use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{kind} cell needs at least {min} vertices, got {n}")]
    TooSmall {
        kind: &'static str,
        min: usize,
        n: usize,
    },

    #[error("matrix is not Hermitian (max |H - H^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("invalid phase table: {0}")]
    InvalidPhaseTable(String),

    #[error("invalid circulant first row: {0}")]
    InvalidFirstRow(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("eigensolver did not converge within {0} rotations")]
    NoConvergence(usize),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("density matrix not positive: minimum eigenvalue {0:e}")]
    PositivityViolation(f64),

    #[error("trace drifted by {0:e} during integration")]
    TraceDrift(f64),

    #[error("integrator guard violated: {0}")]
    StepGuard(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("edge list line {line}: {msg}")]
    EdgeList { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
