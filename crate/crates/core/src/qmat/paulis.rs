//! Standard qubit operators. Basis order is `|0⟩` (ground), `|1⟩` (excited).

use super::CMatrix;
use crate::scalar::{cx, re, Real};

pub fn sigma_x<T: Real>() -> CMatrix<T> {
    CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn sigma_y<T: Real>() -> CMatrix<T> {
    let z = re(T::zero());
    CMatrix::from_rows(&[&[z, cx(T::zero(), -T::one())], &[cx(T::zero(), T::one()), z]])
}

/// `diag(1, −1)`.
pub fn sigma_z<T: Real>() -> CMatrix<T> {
    CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// Lowering operator `|0⟩⟨1|`.
pub fn sigma_minus<T: Real>() -> CMatrix<T> {
    CMatrix::unit(2, 0, 1)
}

/// Raising operator `|1⟩⟨0|`.
pub fn sigma_plus<T: Real>() -> CMatrix<T> {
    CMatrix::unit(2, 1, 0)
}

/// Excited-state projector `σ₊σ₋ = |1⟩⟨1|`.
pub fn excited_projector<T: Real>() -> CMatrix<T> {
    CMatrix::unit(2, 1, 1)
}
