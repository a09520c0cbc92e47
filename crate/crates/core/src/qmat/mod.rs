//! Dense complex-matrix primitives for Hilbert spaces of dimension ≤ 4 and
//! their tensor squares.

mod eig;
mod matrix;
pub mod paulis;

pub use eig::{hermitian_eig, hermitian_eigenvalues, min_eigenvalue, HermitianSpectrum, DEFAULT_HERMITICITY_TOL};
pub use matrix::{CMatrix, Subsystem};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QmatError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{len} entries cannot fill a {rows}x{cols} matrix")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
}
