//! Dense row-major complex matrices sized for small Hilbert spaces.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::QmatError;
use crate::scalar::{re, Cx, Real};

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

/// Which tensor factor survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

impl<T: Real> CMatrix<T> {
    /// Builds a matrix from row-major entries; rejects non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Cx<T>>) -> Result<Self, QmatError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(QmatError::ShapeMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QmatError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Cx::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cx::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Square matrix from nested rows of complex entries.
    ///
    /// Panics on ragged input; intended for literals in code and tests.
    pub fn from_rows(rows: &[&[Cx<T>]]) -> Self {
        let n = rows.len();
        let m = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self::from_fn(n, m, |i, j| rows[i][j])
    }

    /// Matrix from nested rows of real entries (panics on ragged input).
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self::from_fn(n, m, |i, j| re(T::lit(rows[i][j])))
    }

    pub fn diag(values: &[Cx<T>]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[Cx<T>], v: &[Cx<T>]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// Matrix unit `|i⟩⟨j|` of size `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = Cx::one();
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Cx<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Cx<T>> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Cx<T>) -> Cx<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| f(*z)).collect(),
        }
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    /// `self += s * other`, in place.
    pub fn axpy(&mut self, s: Cx<T>, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * *b;
        }
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), |acc, x| acc.max(x))
    }

    /// `‖self − other‖_max`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), |acc, x| acc.max(x))
    }

    /// `‖M − M†‖_max`; infinite for non-square input.
    pub fn hermiticity_deviation(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let n = self.rows;
        let mut dev = T::zero();
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Column-stacked vectorization: entry `(i, j)` lands at `i + rows·j`.
    pub fn vectorize(&self) -> Vec<Cx<T>> {
        let mut v = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    /// Inverse of [`CMatrix::vectorize`] for a square `d×d` target.
    pub fn unvectorize(v: &[Cx<T>], d: usize) -> Result<Self, QmatError> {
        if v.len() != d * d {
            return Err(QmatError::DimensionMismatch {
                expected: d * d,
                found: v.len(),
            });
        }
        Ok(Self::from_fn(d, d, |i, j| v[i + d * j]))
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| *a * *b).sum()
            })
            .collect()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (ra, ca) = (self.rows, self.cols);
        let (rb, cb) = (other.rows, other.cols);
        let mut out = Self::zeros(ra * rb, ca * cb);
        for i in 0..ra {
            for j in 0..ca {
                let a = self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..rb {
                    for l in 0..cb {
                        out[(i * rb + k, j * cb + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Partial trace of an operator on `A ⊗ B`, keeping `keep`.
    pub fn partial_trace(&self, dims: (usize, usize), keep: Subsystem) -> Result<Self, QmatError> {
        let (da, db) = dims;
        if !self.is_square() {
            return Err(QmatError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if da * db != self.rows {
            return Err(QmatError::DimensionMismatch {
                expected: da * db,
                found: self.rows,
            });
        }
        let out = match keep {
            Subsystem::A => Self::from_fn(da, da, |i, j| (0..db).map(|k| self[(i * db + k, j * db + k)]).sum()),
            Subsystem::B => Self::from_fn(db, db, |k, l| (0..da).map(|i| self[(i * db + k, i * db + l)]).sum()),
        };
        Ok(out)
    }

    /// Trace norm `‖M‖₁` of a Hermitian matrix (sum of |eigenvalues|).
    pub fn trace_norm(&self, hermiticity_tol: T) -> Result<T, QmatError> {
        let spec = super::hermitian_eigenvalues(self, hermiticity_tol)?;
        Ok(spec.iter().map(|x| x.abs()).sum())
    }

    /// Smallest eigenvalue ≥ −`tol`.
    pub fn is_positive_semidefinite(&self, tol: T) -> Result<bool, QmatError> {
        Ok(super::min_eigenvalue(self)? >= -tol)
    }

    fn check_same_shape(&self, other: &Self) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "shape mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = Cx<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a, T: Real> Mul<&'a CMatrix<T>> for &'a CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &'a CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut out = CMatrix::zeros(n, p);
        for i in 0..n {
            for k in 0..m {
                let a = self.data[i * m + k];
                if a.is_zero() {
                    continue;
                }
                let row = &rhs.data[k * p..(k + 1) * p];
                let dst = &mut out.data[i * p..(i + 1) * p];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * *b;
                }
            }
        }
        out
    }
}

impl<'a, T: Real> Add<&'a CMatrix<T>> for &'a CMatrix<T> {
    type Output = CMatrix<T>;

    fn add(self, rhs: &'a CMatrix<T>) -> CMatrix<T> {
        self.check_same_shape(rhs);
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<'a, T: Real> Sub<&'a CMatrix<T>> for &'a CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: &'a CMatrix<T>) -> CMatrix<T> {
        self.check_same_shape(rhs);
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<T: Real> Neg for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn neg(self) -> CMatrix<T> {
        self.map(|z| -z)
    }
}

impl<T: Real> fmt::Debug for CMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::paulis;

    #[test]
    fn kron_sigma_z_identity_is_diagonal() {
        let z = paulis::sigma_z::<f64>();
        let k = z.kron(&CMatrix::identity(2));
        let expect = CMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, -1.0, 0.0],
            &[0.0, 0.0, 0.0, -1.0],
        ]);
        assert_eq!(k, expect);
    }

    #[test]
    fn kron_scalar_identity_is_noop() {
        let m = CMatrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(CMatrix::identity(1).kron(&m), m);
    }

    #[test]
    fn kron_of_units_lands_in_corner() {
        let u = CMatrix::<f64>::unit(2, 0, 1);
        let k = u.kron(&u);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i, j) == (0, 3) { 1.0 } else { 0.0 };
                assert_eq!(k[(i, j)].re, expect);
                assert_eq!(k[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let h = 1.0 / 2f64.sqrt();
        let phi = [re(h), re(0.0), re(0.0), re(h)];
        let rho = CMatrix::outer(&phi, &phi);
        let half = CMatrix::identity(2).scale_real(0.5);
        for keep in [Subsystem::A, Subsystem::B] {
            let red = rho.partial_trace((2, 2), keep).unwrap();
            assert!(red.max_abs_diff(&half) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_of_product_keeps_factor() {
        let a = CMatrix::<f64>::from_real_rows(&[&[0.7, 0.1], &[0.1, 0.3]]);
        let b = CMatrix::<f64>::from_real_rows(&[&[0.4, 0.2], &[0.2, 0.6]]);
        let red = a.kron(&b).partial_trace((2, 2), Subsystem::A).unwrap();
        assert!(red.max_abs_diff(&a) < 1e-15);
        let red = a.kron(&b).partial_trace((2, 2), Subsystem::B).unwrap();
        assert!(red.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn partial_trace_dimension_mismatch() {
        let m = CMatrix::<f64>::identity(4);
        assert!(matches!(
            m.partial_trace((3, 2), Subsystem::A),
            Err(QmatError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn new_rejects_nan_and_bad_shape() {
        assert!(matches!(
            CMatrix::<f64>::new(2, 2, vec![re(1.0); 3]),
            Err(QmatError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            CMatrix::<f64>::new(1, 1, vec![re(f64::NAN)]),
            Err(QmatError::NonFinite)
        ));
    }

    #[test]
    fn vectorize_is_column_stacking() {
        let m = CMatrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let v: Vec<f64> = m.vectorize().iter().map(|z| z.re).collect();
        assert_eq!(v, vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(CMatrix::unvectorize(&m.vectorize(), 2).unwrap(), m);
    }
}
