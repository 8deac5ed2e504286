use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric: |L[{row},{col}] - L[{col},{row}]| = {gap:e}")]
    Asymmetric { row: usize, col: usize, gap: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below -{tolerance:e}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("factor reconstruction error {error:e} exceeds tolerance {tolerance:e}")]
    Reconstruction { error: f64, tolerance: f64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("enumeration of {count} candidates exceeds cap {cap}")]
    CapExceeded { count: u128, cap: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("entry ({row}, {col}) = {value} is not an integer")]
    NonInteger { row: usize, col: usize, value: f64 },

    #[error("runtime invariant violated: {0}")]
    Invariant(String),
}
