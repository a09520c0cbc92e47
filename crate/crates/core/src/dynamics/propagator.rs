//! Two-time propagators `Λ(t₂, t₁)` obtained by forward integration of the
//! Liouville-space equation `dΦ/dt = L̂(t)Φ`, `Φ(t₁) = I`.

use serde::Serialize;

use super::integrator::{integrate, IntegrationStats, IntegratorTolerances};
use super::superop::{
    apply_generator_unchecked, apply_superop, generator_superoperator_unchecked, reshuffle, trace_preservation_error,
};
use super::{DynamicsError, TimeLocalModel};
use crate::qmat::{CMatrix, Subsystem};
use crate::scalar::{re, Real};

/// Matrix of `Λ(t₂, t₁)` on column-stacked `d×d` operators.
#[derive(Debug, Clone)]
pub struct PropagatorMatrix<T: Real> {
    pub dim: usize,
    pub t1: T,
    pub t2: T,
    pub matrix: CMatrix<T>,
    pub stats: IntegrationStats,
}

impl<T: Real> PropagatorMatrix<T> {
    pub fn identity(dim: usize, t: T) -> Self {
        Self {
            dim,
            t1: t,
            t2: t,
            matrix: CMatrix::identity(dim * dim),
            stats: IntegrationStats::default(),
        }
    }

    pub fn trace_preservation_error(&self) -> T {
        trace_preservation_error(&self.matrix, self.dim)
    }

    pub fn apply(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        apply_superop(&self.matrix, rho)
    }

    /// Normalized Choi state of this map.
    pub fn choi(&self) -> ChoiMatrix<T> {
        ChoiMatrix {
            dim: self.dim,
            t1: self.t1,
            t2: self.t2,
            matrix: reshuffle(&self.matrix, self.dim).scale_real(T::one() / T::from_usize(self.dim).unwrap()),
        }
    }
}

/// Normalized Choi state `ρ_Λ = (Λ ⊗ id)|φ⟩⟨φ|`, system factor first.
#[derive(Debug, Clone)]
pub struct ChoiMatrix<T: Real> {
    pub dim: usize,
    pub t1: T,
    pub t2: T,
    pub matrix: CMatrix<T>,
}

/// Deviations of a Choi state from its structural invariants.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChoiDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    /// `‖Tr_system ρ_Λ − I/d‖_max`.
    pub marginal_error: f64,
}

impl ChoiDiagnostics {
    /// Unit trace and Hermiticity within 1e-9, marginal within 1e-8.
    pub fn within_defaults(&self) -> bool {
        self.trace_error <= 1e-9 && self.hermiticity_error <= 1e-9 && self.marginal_error <= 1e-8
    }
}

impl<T: Real> ChoiMatrix<T> {
    /// `|φ⟩⟨φ|` with `|φ⟩ = d^{-1/2} Σ |ii⟩`.
    pub fn maximally_entangled(dim: usize) -> CMatrix<T> {
        let d = T::from_usize(dim).unwrap();
        let n = dim * dim;
        CMatrix::from_fn(n, n, |r, c| {
            if r % (dim + 1) == 0 && c % (dim + 1) == 0 {
                re(T::one() / d)
            } else {
                re(T::zero())
            }
        })
    }

    pub fn diagnostics(&self) -> ChoiDiagnostics {
        let d = self.dim;
        let marginal = self
            .matrix
            .partial_trace((d, d), Subsystem::B)
            .expect("Choi matrix is d²×d²");
        let target = CMatrix::identity(d).scale_real(T::one() / T::from_usize(d).unwrap());
        ChoiDiagnostics {
            trace_error: (self.matrix.trace() - re(T::one())).norm().to_f64_lossy(),
            hermiticity_error: self.matrix.hermiticity_deviation().to_f64_lossy(),
            marginal_error: marginal.max_abs_diff(&target).to_f64_lossy(),
        }
    }
}

/// Windows `(lo, t_s, hi)` crossed with the bridge, clipped to start no
/// earlier than `t1`.
fn bridge_windows<T: Real>(model: &TimeLocalModel<T>, t1: T, t_end: T) -> Vec<(T, T, T)> {
    let w = model.bridge_width();
    model
        .singular_times()
        .in_range(t1 - w, t_end + w)
        .into_iter()
        .filter(|&ts| ts + w > t1)
        .map(|ts| ((ts - w).max(t1), ts, ts + w))
        .collect()
}

type Slot<T> = Option<Result<CMatrix<T>, DynamicsError>>;

/// Integrates a state from `t1` through ascending `targets`, crossing the
/// window around each singular time with the model's bridge. `rhs` is the
/// regular-time derivative, `jump` applies a bridge superoperator.
///
/// Targets inside a guard window, or beyond a window the model cannot
/// bridge, receive an error; the others receive the state.
#[allow(clippy::type_complexity)]
fn walk<T, R, J>(
    model: &TimeLocalModel<T>,
    t1: T,
    y0: CMatrix<T>,
    targets: &[T],
    tol: &IntegratorTolerances<T>,
    rhs: R,
    jump: J,
) -> Result<(Vec<Result<CMatrix<T>, DynamicsError>>, IntegrationStats), DynamicsError>
where
    T: Real,
    R: Fn(T, &CMatrix<T>) -> CMatrix<T>,
    J: Fn(&CMatrix<T>, &CMatrix<T>) -> CMatrix<T>,
{
    model.check_regular(t1)?;
    if targets.windows(2).any(|w| w[1] < w[0]) || targets.iter().any(|&t| t < t1) {
        return Err(DynamicsError::InvalidParams(
            "targets must be ascending and not before t1".into(),
        ));
    }
    let mut out: Vec<Slot<T>> = vec![None; targets.len()];
    let mut stats = IntegrationStats::default();
    let Some(&t_end) = targets.last() else {
        return Ok((Vec::new(), stats));
    };
    let windows = bridge_windows(model, t1, t_end);
    let guard = model.guard();

    let mut t = t1;
    let mut y = y0;
    let mut idx = 0;
    let fail_rest = |out: &mut Vec<Slot<T>>, e: DynamicsError| {
        for slot in out.iter_mut().filter(|s| s.is_none()) {
            *slot = Some(Err(e.clone()));
        }
    };
    for k in 0..=windows.len() {
        let seg_end = windows.get(k).map(|w| w.0);
        // Regular segment [t, seg_end].
        let first = idx;
        while idx < targets.len() && seg_end.is_none_or(|e| targets[idx] <= e) {
            idx += 1;
        }
        let mut outputs = targets[first..idx].to_vec();
        let need_end = idx < targets.len();
        if let (true, Some(e)) = (need_end, seg_end) {
            if outputs.last().is_none_or(|&l| l < e) {
                outputs.push(e);
            }
        }
        if !outputs.is_empty() {
            let n_seg = idx - first;
            let res = integrate(&rhs, t, y.clone(), &outputs, tol, |i, _, yy| {
                if i < n_seg {
                    out[first + i] = Some(Ok(yy.clone()));
                }
            });
            match res {
                Ok((y_last, s)) => {
                    stats.merge(&s);
                    y = y_last;
                }
                Err(e) => {
                    fail_rest(&mut out, e);
                    break;
                }
            }
        }
        if !need_end {
            break;
        }
        let (lo, ts, hi) = windows[k];
        let bridge = model.bridge();
        let crossing = DynamicsError::SingularCrossing {
            singular: ts.to_f64_lossy(),
        };
        while idx < targets.len() && targets[idx] <= hi {
            let tt = targets[idx];
            out[idx] = Some(if (tt - ts).abs() <= guard {
                Err(DynamicsError::SingularTime {
                    t: tt.to_f64_lossy(),
                    singular: ts.to_f64_lossy(),
                    guard: guard.to_f64_lossy(),
                })
            } else {
                match bridge {
                    Some(b) => Ok(jump(&b(lo, tt), &y)),
                    None => Err(crossing.clone()),
                }
            });
            idx += 1;
        }
        let Some(bridge) = bridge else {
            fail_rest(&mut out, crossing);
            break;
        };
        if idx >= targets.len() {
            break;
        }
        y = jump(&bridge(lo, hi), &y);
        t = hi;
    }
    let results = out.into_iter().map(|o| o.expect("every target resolved")).collect();
    Ok((results, stats))
}

/// `Λ(t2, t1)` at each of the ascending `t2s` from a single forward sweep.
///
/// The outer error covers an invalid start (inside a guard window, bad
/// ordering); per-target errors cover targets that fall inside a guard
/// window or past a failure.
#[allow(clippy::type_complexity)]
pub fn propagate_many<T: Real>(
    model: &TimeLocalModel<T>,
    t1: T,
    t2s: &[T],
    tol: &IntegratorTolerances<T>,
) -> Result<Vec<Result<PropagatorMatrix<T>, DynamicsError>>, DynamicsError> {
    if t1 < T::zero() {
        return Err(DynamicsError::InvalidParams("t1 must be non-negative".into()));
    }
    let d = model.dim();
    let rhs = |t: T, phi: &CMatrix<T>| &generator_superoperator_unchecked(model, t) * phi;
    let jump = |b: &CMatrix<T>, phi: &CMatrix<T>| b * phi;
    let (res, stats) = walk(model, t1, CMatrix::identity(d * d), t2s, tol, rhs, jump)?;
    Ok(res
        .into_iter()
        .zip(t2s)
        .map(|(r, &t2)| {
            r.map(|m| PropagatorMatrix {
                dim: d,
                t1,
                t2,
                matrix: if t2 == t1 { CMatrix::identity(d * d) } else { m },
                stats,
            })
        })
        .collect())
}

/// `Λ(t2, t1)`; identity when `t2 == t1`.
pub fn propagate<T: Real>(
    model: &TimeLocalModel<T>,
    t1: T,
    t2: T,
    tol: &IntegratorTolerances<T>,
) -> Result<PropagatorMatrix<T>, DynamicsError> {
    if t2 < t1 {
        return Err(DynamicsError::InvalidParams(format!(
            "t2 ({}) precedes t1 ({})",
            t2.to_f64_lossy(),
            t1.to_f64_lossy()
        )));
    }
    model.check_regular(t2)?;
    if t2 == t1 {
        model.check_regular(t1)?;
        return Ok(PropagatorMatrix::identity(model.dim(), t1));
    }
    propagate_many(model, t1, &[t2], tol)?.pop().unwrap()
}

/// Normalized Choi state of `Λ(t2, t1)` via the reshuffled propagator.
pub fn choi_of_interval<T: Real>(
    model: &TimeLocalModel<T>,
    t1: T,
    t2: T,
    tol: &IntegratorTolerances<T>,
) -> Result<ChoiMatrix<T>, DynamicsError> {
    Ok(propagate(model, t1, t2, tol)?.choi())
}

/// Evolves a density operator from `t1` to each of `t2s` with `L(t)ρ`
/// directly (no superoperator), bridging singular windows.
#[allow(clippy::type_complexity)]
pub fn evolve_state<T: Real>(
    model: &TimeLocalModel<T>,
    rho: &CMatrix<T>,
    t1: T,
    t2s: &[T],
    tol: &IntegratorTolerances<T>,
) -> Result<Vec<Result<CMatrix<T>, DynamicsError>>, DynamicsError> {
    let d = model.dim();
    if rho.rows() != d || rho.cols() != d {
        return Err(DynamicsError::DimensionMismatch {
            expected: d,
            found: rho.rows(),
        });
    }
    let rhs = |t: T, r: &CMatrix<T>| apply_generator_unchecked(model, t, r);
    let jump = |b: &CMatrix<T>, r: &CMatrix<T>| apply_superop(b, r);
    Ok(walk(model, t1, rho.clone(), t2s, tol, rhs, jump)?.0)
}

/// Choi state built by evolving `|φ⟩⟨φ|` under the ancilla-extended master
/// equation from `t1` to `t2`.
pub fn choi_via_ancilla<T: Real>(
    model: &TimeLocalModel<T>,
    t1: T,
    t2: T,
    tol: &IntegratorTolerances<T>,
) -> Result<ChoiMatrix<T>, DynamicsError> {
    let ext = model.extend_with_ancilla();
    let phi = ChoiMatrix::maximally_entangled(model.dim());
    let matrix = evolve_state(&ext, &phi, t1, &[t2], tol)?.pop().unwrap()?;
    Ok(ChoiMatrix {
        dim: model.dim(),
        t1,
        t2,
        matrix,
    })
}
