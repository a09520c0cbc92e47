//! Cyclic complex Jacobi eigensolver for small Hermitian matrices.
//!
//! Every sweep visits the off-diagonal pairs in the same order, so the
//! result is bitwise reproducible for a given input.

use num_traits::Zero;

use super::{CMatrix, QmatError};
use crate::scalar::{Cx, Real};

/// Default bound on `‖M − M†‖_max` accepted by the eigensolvers.
pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 64;

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct HermitianSpectrum<T: Real> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: CMatrix<T>,
    /// `‖M − M†‖_max` of the input before symmetrization.
    pub hermiticity_deviation: T,
}

impl<T: Real> HermitianSpectrum<T> {
    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let v = &self.eigenvectors;
        let n = self.eigenvalues.len();
        CMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * self.eigenvalues[k]).sum()
        })
    }
}

fn checked_hermitian_part<T: Real>(m: &CMatrix<T>, tol: T) -> Result<(CMatrix<T>, T), QmatError> {
    if !m.is_square() {
        return Err(QmatError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(QmatError::NonFinite);
    }
    let dev = m.hermiticity_deviation();
    // Scale-aware: integrator drift grows with the matrix magnitude.
    let scale = T::one().max(m.max_abs());
    if dev > tol * scale {
        return Err(QmatError::NotHermitian {
            deviation: dev.to_f64_lossy(),
        });
    }
    Ok((m.hermitian_part(), dev))
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig<T: Real>(m: &CMatrix<T>, hermiticity_tol: T) -> Result<HermitianSpectrum<T>, QmatError> {
    let (mut a, dev) = checked_hermitian_part(m, hermiticity_tol)?;
    let n = a.rows();
    let mut v = CMatrix::identity(n);
    jacobi_sweeps(&mut a, Some(&mut v));

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap().then(i.cmp(&j)));

    let eigenvalues = order.iter().map(|&k| diag[k]).collect();
    let mut vecs = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    fix_phases(&mut vecs);
    Ok(HermitianSpectrum {
        eigenvalues,
        eigenvectors: vecs,
        hermiticity_deviation: dev,
    })
}

/// Eigenvalues only (ascending); skips the eigenvector accumulation.
pub fn hermitian_eigenvalues<T: Real>(m: &CMatrix<T>, hermiticity_tol: T) -> Result<Vec<T>, QmatError> {
    let (mut a, _) = checked_hermitian_part(m, hermiticity_tol)?;
    jacobi_sweeps(&mut a, None);
    let mut ev: Vec<T> = (0..a.rows()).map(|i| a[(i, i)].re).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(ev)
}

/// Smallest eigenvalue, using the default Hermiticity tolerance.
pub fn min_eigenvalue<T: Real>(m: &CMatrix<T>) -> Result<T, QmatError> {
    let ev = hermitian_eigenvalues(m, T::lit(DEFAULT_HERMITICITY_TOL))?;
    Ok(ev[0])
}

fn off_diagonal_norm2<T: Real>(a: &CMatrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s
}

fn jacobi_sweeps<T: Real>(a: &mut CMatrix<T>, mut v: Option<&mut CMatrix<T>>) {
    let n = a.rows();
    if n < 2 {
        return;
    }
    let total: T = a.as_slice().iter().map(|z| z.norm_sqr()).sum();
    if total.is_zero() {
        return;
    }
    let target = total * T::eps() * T::eps();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm2(a) <= target {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag.is_zero() {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Skip pairs already negligible against both diagonal entries.
                let tiny = T::eps() * T::eps() * (app.abs() + aqq.abs());
                if mag <= tiny {
                    a[(p, q)] = Cx::zero();
                    a[(q, p)] = Cx::zero();
                    continue;
                }
                let phase = apq / mag;
                let theta = (aqq - app) / (mag + mag);
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // G = [[c, s], [-s·conj(φ), c·conj(φ)]] on the (p, q) plane.
                let gpp = Cx::new(c, T::zero());
                let gpq = Cx::new(s, T::zero());
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[(p, q)] = Cx::zero();
                a[(q, p)] = Cx::zero();
                a[(p, p)] = Cx::new(a[(p, p)].re, T::zero());
                a[(q, q)] = Cx::new(a[(q, q)].re, T::zero());

                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * gpp + vkq * gqp;
                        v[(k, q)] = vkp * gpq + vkq * gqq;
                    }
                }
            }
        }
    }
}

/// Rotates each column so its largest-modulus entry is real and positive.
fn fix_phases<T: Real>(v: &mut CMatrix<T>) {
    let n = v.rows();
    for j in 0..v.cols() {
        let mut best = 0;
        let mut best_mag = -T::one();
        for i in 0..n {
            let m = v[(i, j)].norm();
            // Strict comparison with slack keeps the choice stable under roundoff.
            if m > best_mag + T::lit(1e-12) {
                best = i;
                best_mag = m;
            }
        }
        if best_mag <= T::zero() {
            continue;
        }
        let ph = v[(best, j)].conj() / best_mag;
        for i in 0..n {
            v[(i, j)] *= ph;
        }
        v[(best, j)] = Cx::new(v[(best, j)].re, T::zero());
    }
}
