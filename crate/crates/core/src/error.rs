use thiserror::Error;

/// Errors raised by the simulation laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameter `{field}`: {reason}")]
    InvalidModel { field: &'static str, reason: String },

    #[error("qubit count mismatch: expected {expected}, got {found}")]
    QubitMismatch { expected: usize, found: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    SameQubit(usize),

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("expectation has imaginary residual {0:.3e}; operator is not Hermitian")]
    NonHermitian(f64),

    #[error("{n_qubits} qubits exceeds the dense ceiling of {ceiling}")]
    OverCeiling { n_qubits: usize, ceiling: usize },

    #[error("operator does not commute with the parity operator")]
    BrokenParity,

    #[error("no eigenvector found in the parity {0:+} sector")]
    EmptySector(i8),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("invalid circuit spec: {0}")]
    InvalidCircuit(String),

    #[error("degenerate polarization: |<S_z>|^2 = {0:.3e}")]
    DegeneratePolarization(f64),

    #[error("optimizer aborted: {0}")]
    Optimizer(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
