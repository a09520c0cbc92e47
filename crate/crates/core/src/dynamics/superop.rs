//! Generator action `L(t)ρ`, its Liouville-space matrix, and helpers for
//! superoperators acting on column-stacked density matrices.
//!
//! With column stacking, `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use num_traits::Zero;

use super::{DynamicsError, TimeLocalModel};
use crate::qmat::CMatrix;
use crate::scalar::{imag_unit, re, Cx, Real};

fn check_dim<T: Real>(model: &TimeLocalModel<T>, rho: &CMatrix<T>) -> Result<(), DynamicsError> {
    let d = model.dim();
    if rho.rows() != d || rho.cols() != d {
        return Err(DynamicsError::DimensionMismatch {
            expected: d,
            found: rho.rows().max(rho.cols()),
        });
    }
    Ok(())
}

/// `L(t)ρ`, evaluated directly on the `d×d` matrix.
pub fn apply_generator<T: Real>(
    model: &TimeLocalModel<T>,
    t: T,
    rho: &CMatrix<T>,
) -> Result<CMatrix<T>, DynamicsError> {
    check_dim(model, rho)?;
    model.check_regular(t)?;
    Ok(apply_generator_unchecked(model, t, rho))
}

pub(crate) fn apply_generator_unchecked<T: Real>(model: &TimeLocalModel<T>, t: T, rho: &CMatrix<T>) -> CMatrix<T> {
    let mut out = CMatrix::zeros(rho.rows(), rho.cols());
    if let Some(h) = model.hamiltonian() {
        let h = h(t);
        out.axpy(-imag_unit::<T>(), &h.commutator(rho));
    }
    let half = re(T::lit(0.5));
    for ch in model.channels() {
        let gamma = (ch.rate)(t);
        if gamma.is_zero() {
            continue;
        }
        let v = (ch.operator)(t);
        let vd = v.adjoint();
        let vdv = &vd * &v;
        let sandwich = &(&v * rho) * &vd;
        let g = re(gamma);
        out.axpy(g, &sandwich);
        out.axpy(-g * half, &(&vdv * rho));
        out.axpy(-g * half, &(rho * &vdv));
    }
    out
}

/// `L̂(t)` with `L̂·vec(ρ) = vec(L(t)ρ)`.
pub fn generator_superoperator<T: Real>(model: &TimeLocalModel<T>, t: T) -> Result<CMatrix<T>, DynamicsError> {
    model.check_regular(t)?;
    Ok(generator_superoperator_unchecked(model, t))
}

pub(crate) fn generator_superoperator_unchecked<T: Real>(model: &TimeLocalModel<T>, t: T) -> CMatrix<T> {
    let d = model.dim();
    let id = CMatrix::<T>::identity(d);
    let mut l = CMatrix::zeros(d * d, d * d);
    if let Some(h) = model.hamiltonian() {
        let h = h(t);
        // −i (I⊗H − Hᵀ⊗I)
        let i = imag_unit::<T>();
        add_kron(&mut l, -i, &id, &h);
        add_kron(&mut l, i, &h.transpose(), &id);
    }
    for ch in model.channels() {
        let gamma = (ch.rate)(t);
        if gamma.is_zero() {
            continue;
        }
        match ch.cached_dissipator() {
            Some(dm) => l.axpy(re(gamma), dm),
            None => l.axpy(re(gamma), &dissipator_superop(&(ch.operator)(t))),
        }
    }
    l
}

/// `l += c·(a ⊗ b)` without forming the product.
fn add_kron<T: Real>(l: &mut CMatrix<T>, c: Cx<T>, a: &CMatrix<T>, b: &CMatrix<T>) {
    let (rb, cb) = (b.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let s = c * a[(i, j)];
            if s.is_zero() {
                continue;
            }
            for k in 0..rb {
                for m in 0..cb {
                    l[(i * rb + k, j * cb + m)] += s * b[(k, m)];
                }
            }
        }
    }
}

/// `V̄⊗V − ½ I⊗V†V − ½ (V†V)ᵀ⊗I`: the dissipator of `V` at unit rate.
pub(crate) fn dissipator_superop<T: Real>(v: &CMatrix<T>) -> CMatrix<T> {
    let d = v.rows();
    let id = CMatrix::<T>::identity(d);
    let vdv = &v.adjoint() * v;
    let half = re(T::lit(-0.5));
    let mut l = CMatrix::zeros(d * d, d * d);
    add_kron(&mut l, re(T::one()), &v.conj(), v);
    add_kron(&mut l, half, &id, &vdv);
    add_kron(&mut l, half, &vdv.transpose(), &id);
    l
}

/// Applies a superoperator matrix to a `d×d` operator.
pub fn apply_superop<T: Real>(superop: &CMatrix<T>, rho: &CMatrix<T>) -> CMatrix<T> {
    let d = rho.rows();
    let v = superop.apply(&rho.vectorize());
    CMatrix::unvectorize(&v, d).expect("superoperator shape matches operator")
}

/// Superoperator of `Λ ⊗ id_d` given that of `Λ`, for operators on
/// `system ⊗ ancilla` (system factor first).
pub fn tensor_identity<T: Real>(superop: &CMatrix<T>, d: usize) -> CMatrix<T> {
    let big = d * d;
    let n = big * big;
    let mut out = CMatrix::zeros(n, n);
    // Column for basis element |a k⟩⟨b l| with a,b system and k,l ancilla.
    for col in 0..n {
        let (r, c) = (col % big, col / big);
        let (a, k) = (r / d, r % d);
        let (b, l) = (c / d, c % d);
        let sys_col = a + d * b;
        for a2 in 0..d {
            for b2 in 0..d {
                let val = superop[(a2 + d * b2, sys_col)];
                if val.is_zero() {
                    continue;
                }
                let r2 = a2 * d + k;
                let c2 = b2 * d + l;
                out[(r2 + big * c2, col)] = val;
            }
        }
    }
    out
}

/// Realignment `Φ ↦ C` with `C[(a,i),(b,j)] = Φ[a + d·b, i + d·j]`:
/// the unnormalized Choi matrix `Σ_ij Λ(|i⟩⟨j|) ⊗ |i⟩⟨j|` (system first).
pub fn reshuffle<T: Real>(superop: &CMatrix<T>, d: usize) -> CMatrix<T> {
    CMatrix::from_fn(d * d, d * d, |row, col| {
        let (a, i) = (row / d, row % d);
        let (b, j) = (col / d, col % d);
        superop[(a + d * b, i + d * j)]
    })
}

/// Inverse of [`reshuffle`].
pub fn unreshuffle<T: Real>(choi: &CMatrix<T>, d: usize) -> CMatrix<T> {
    CMatrix::from_fn(d * d, d * d, |row, col| {
        let (a, b) = (row % d, row / d);
        let (i, j) = (col % d, col / d);
        choi[(a * d + i, b * d + j)]
    })
}

/// `ρ ↦ U ρ U†` as a superoperator.
pub fn unitary_superop<T: Real>(u: &CMatrix<T>) -> CMatrix<T> {
    u.conj().kron(u)
}

/// Qubit amplitude-damping map with complex amplitude ratio `r`
/// (`|1⟩` excited): `ρ₁₁ → |r|²ρ₁₁`, `ρ₀₀ → ρ₀₀ + (1−|r|²)ρ₁₁`,
/// `ρ₁₀ → r ρ₁₀`, `ρ₀₁ → r̄ ρ₀₁`.
pub fn amplitude_damping_superop<T: Real>(r: Cx<T>) -> CMatrix<T> {
    let p = r.norm_sqr();
    let mut s = CMatrix::zeros(4, 4);
    s[(0, 0)] = re(T::one());
    s[(0, 3)] = re(T::one() - p);
    s[(3, 3)] = re(p);
    s[(1, 1)] = r;
    s[(2, 2)] = r.conj();
    s
}

/// Qubit dephasing map scaling both coherences by the real factor `k`.
pub fn dephasing_superop<T: Real>(k: T) -> CMatrix<T> {
    CMatrix::diag(&[re(T::one()), re(k), re(k), re(T::one())])
}

/// `max_col |⟨⟨I| Φ − ⟨⟨I||`: deviation from trace preservation.
pub fn trace_preservation_error<T: Real>(superop: &CMatrix<T>, d: usize) -> T {
    let mut worst = T::zero();
    for col in 0..d * d {
        let s: Cx<T> = (0..d).map(|a| superop[(a + d * a, col)]).sum();
        let (i, j) = (col % d, col / d);
        let expect = if i == j { T::one() } else { T::zero() };
        worst = worst.max((s - re(expect)).norm());
    }
    worst
}
