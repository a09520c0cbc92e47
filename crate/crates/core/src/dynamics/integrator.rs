//! Dormand–Prince 5(4) with standard step control, integrating matrix-valued
//! states `dY/dt = f(t, Y)` and emitting the solution at prescribed times.

use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::qmat::CMatrix;
use crate::scalar::{Cx, Real};

/// Error control and safety limits for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorTolerances<T> {
    pub rtol: T,
    pub atol: T,
    /// Smallest step before giving up with `StepSizeUnderflow`.
    pub h_min: T,
    pub max_steps: usize,
}

impl<T: Real> Default for IntegratorTolerances<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-9),
            atol: T::lit(1e-12),
            h_min: T::lit(1e-14),
            max_steps: 2_000_000,
        }
    }
}

impl<T: Real> IntegratorTolerances<T> {
    pub fn new(rtol: T, atol: T) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    /// `rtol = 1e-11`, `atol = 1e-14`: integration noise an order of
    /// magnitude below the default negativity threshold, so that maps on
    /// the CP boundary are not counted as non-CP. Default for NM estimates.
    pub fn fine() -> Self {
        Self::new(T::lit(1e-11), T::lit(1e-14))
    }

    /// `rtol = 1e-13`, `atol = 1e-16`: for comparisons against closed forms
    /// whose entries grow by several orders of magnitude past a singular
    /// time, where the default tolerances leave ~1e-9 relative error.
    pub fn precise() -> Self {
        Self::new(T::lit(1e-13), T::lit(1e-16))
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let ok = self.rtol > T::zero() && self.atol > T::zero() && self.h_min > T::zero();
        if ok && self.max_steps > 0 {
            Ok(())
        } else {
            Err(DynamicsError::InvalidParams(
                "integrator tolerances must be positive".into(),
            ))
        }
    }
}

/// Work counters of one or more integrations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest normalized local error estimate over accepted steps (≤ 1).
    pub max_error_estimate: f64,
}

impl IntegrationStats {
    pub fn merge(&mut self, other: &IntegrationStats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
        self.max_error_estimate = self.max_error_estimate.max(other.max_error_estimate);
    }
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂ (5th minus embedded 4th order weights).
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// `y + h·Σ aᵢ kᵢ`.
fn combine<T: Real>(y: &CMatrix<T>, h: T, terms: &[(f64, &CMatrix<T>)]) -> CMatrix<T> {
    let mut out = y.clone();
    let dst = out.as_mut_slice();
    for &(a, k) in terms {
        if a == 0.0 {
            continue;
        }
        let s = h * T::lit(a);
        for (d, kv) in dst.iter_mut().zip(k.as_slice()) {
            *d += *kv * s;
        }
    }
    out
}

fn error_norm<T: Real>(
    y: &CMatrix<T>,
    y_new: &CMatrix<T>,
    h: T,
    ks: [&CMatrix<T>; 7],
    tol: &IntegratorTolerances<T>,
) -> T {
    let weights = [E1, 0.0, E3, E4, E5, E6, E7].map(T::lit);
    let mut worst = T::zero();
    for idx in 0..y.as_slice().len() {
        let mut e = Cx::new(T::zero(), T::zero());
        for (w, k) in weights.iter().zip(ks.iter()) {
            if !w.is_zero() {
                e += k.as_slice()[idx] * *w;
            }
        }
        let e = (e * h).norm();
        let scale = tol.atol + tol.rtol * y.as_slice()[idx].norm().max(y_new.as_slice()[idx].norm());
        let r = e / scale;
        if r.is_nan() {
            return T::infinity();
        }
        worst = worst.max(r);
    }
    worst
}

/// Integrates from `(t0, y0)` through the ascending `outputs` (all ≥ `t0`),
/// calling `emit(index, t, y)` exactly at each output time.
///
/// Returns the state at the last output (or `y0` when `outputs` is empty).
pub fn integrate<T, F, E>(
    mut rhs: F,
    t0: T,
    y0: CMatrix<T>,
    outputs: &[T],
    tol: &IntegratorTolerances<T>,
    mut emit: E,
) -> Result<(CMatrix<T>, IntegrationStats), DynamicsError>
where
    T: Real,
    F: FnMut(T, &CMatrix<T>) -> CMatrix<T>,
    E: FnMut(usize, T, &CMatrix<T>),
{
    tol.validate()?;
    let mut stats = IntegrationStats::default();
    let mut t = t0;
    let mut y = y0;
    if outputs.is_empty() {
        return Ok((y, stats));
    }
    if outputs.windows(2).any(|w| w[1] < w[0]) || outputs[0] < t0 {
        return Err(DynamicsError::InvalidParams(
            "output times must be ascending and not before the start".into(),
        ));
    }
    let t_end = outputs[outputs.len() - 1];

    let mut k1 = rhs(t, &y);
    stats.rhs_evals += 1;
    let mut h_prop = initial_step(&y, &k1, t_end - t0, tol);
    let mut next_out = 0;
    let mut h_floor = tol.h_min;

    loop {
        // Emit outputs that coincide with the current time.
        while next_out < outputs.len() && outputs[next_out] <= t {
            emit(next_out, outputs[next_out], &y);
            next_out += 1;
        }
        if next_out == outputs.len() {
            break;
        }
        if stats.steps + stats.rejected >= tol.max_steps {
            return Err(DynamicsError::ToleranceNotMet {
                t: t.to_f64_lossy(),
                reason: format!("exceeded {} steps", tol.max_steps),
            });
        }
        let target = outputs[next_out];
        let truncated = t + h_prop >= target;
        let h = if truncated { target - t } else { h_prop };
        if h < h_floor && !truncated {
            return Err(DynamicsError::StepSizeUnderflow {
                t: t.to_f64_lossy(),
                h: h.to_f64_lossy(),
            });
        }

        let k2 = rhs(t + h * T::lit(C2), &combine(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + h * T::lit(C3), &combine(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            t + h * T::lit(C4),
            &combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            t + h * T::lit(C5),
            &combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = rhs(
            t + h,
            &combine(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = combine(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let t_new = if truncated { target } else { t + h };
        let k7 = rhs(t_new, &y_new);
        stats.rhs_evals += 6;

        let err = error_norm(&y, &y_new, h, [&k1, &k2, &k3, &k4, &k5, &k6, &k7], tol);
        if err <= T::one() {
            stats.steps += 1;
            stats.max_error_estimate = stats.max_error_estimate.max(err.to_f64_lossy());
            t = t_new;
            y = y_new;
            k1 = k7;
            let fac = if err.is_zero() {
                T::lit(FAC_MAX)
            } else {
                (T::lit(SAFETY) * err.powf(T::lit(-0.2))).min(T::lit(FAC_MAX))
            };
            let proposal = h * fac;
            // A step shortened to land on an output must not shrink the next one.
            h_prop = if truncated { h_prop.max(proposal) } else { proposal };
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (T::lit(SAFETY) * err.powf(T::lit(-0.2))).clamp(T::lit(FAC_MIN), T::lit(SAFETY))
            } else {
                T::lit(FAC_MIN)
            };
            h_prop = h * fac;
            if h_prop < h_floor {
                return Err(DynamicsError::StepSizeUnderflow {
                    t: t.to_f64_lossy(),
                    h: h_prop.to_f64_lossy(),
                });
            }
        }
        h_floor = tol.h_min.max(T::lit(16.0) * T::eps() * t.abs());
    }
    Ok((y, stats))
}

/// Starting step from the scaled size of the state and its derivative.
fn initial_step<T: Real>(y: &CMatrix<T>, dy: &CMatrix<T>, span: T, tol: &IntegratorTolerances<T>) -> T {
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for (a, b) in y.as_slice().iter().zip(dy.as_slice()) {
        let sc = tol.atol + tol.rtol * a.norm();
        d0 = d0.max(a.norm() / sc);
        d1 = d1.max(b.norm() / sc);
    }
    let h = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    h.min(span.abs()).max(tol.h_min * T::lit(10.0))
}
