use serde::Serialize;

use super::MeasureError;
use crate::dynamics::{evolve_state, BuiltinModel, DynamicsError, IntegratorTolerances, TimeLocalModel};
use crate::qmat::{CMatrix, DEFAULT_HERMITICITY_TOL};
use crate::scalar::Real;

/// `½‖ρ₁ − ρ₂‖₁`.
pub fn trace_distance<T: Real>(rho1: &CMatrix<T>, rho2: &CMatrix<T>) -> Result<T, MeasureError> {
    if rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols() {
        return Err(DynamicsError::DimensionMismatch {
            expected: rho1.rows(),
            found: rho2.rows(),
        }
        .into());
    }
    Ok(T::lit(0.5) * (rho1 - rho2).trace_norm(T::lit(DEFAULT_HERMITICITY_TOL))?)
}

/// An orthogonal pair whose distinguishability is most sensitive to the
/// model's noise: ground/excited for the cavity models, `|±⟩` for
/// dephasing.
pub fn default_blp_pair<T: Real>(model: &BuiltinModel) -> (CMatrix<T>, CMatrix<T>) {
    match model {
        BuiltinModel::SpinBath(_) => {
            let plus = CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
            let minus = CMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]);
            (plus, minus)
        }
        _ => (CMatrix::unit(2, 0, 0), CMatrix::unit(2, 1, 1)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlpSample<T> {
    pub t: T,
    /// Trace distance of the evolved pair; NaN if the state is unavailable.
    pub d: T,
    /// `d` grew since the previous available sample.
    pub increasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlpTrace<T> {
    pub samples: Vec<BlpSample<T>>,
    /// Maximal `[t_a, t_b]` over which `d` increased.
    pub increase_intervals: Vec<(T, T)>,
}

/// Trace distance of `ρ₁(t)`, `ρ₂(t)` evolved from `t_grid[0]` under
/// the model, with the intervals where it grows (an information backflow
/// witness). Samples at singular times are NaN.
pub fn blp_witness<T: Real>(
    model: &TimeLocalModel<T>,
    rho1: &CMatrix<T>,
    rho2: &CMatrix<T>,
    t_grid: &[T],
    tol: &IntegratorTolerances<T>,
) -> Result<BlpTrace<T>, MeasureError> {
    let Some(&t0) = t_grid.first() else {
        return Err(MeasureError::InvalidGrid("empty time grid".into()));
    };
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MeasureError::InvalidGrid(
            "time grid must be strictly increasing".into(),
        ));
    }
    let a = evolve_state(model, rho1, t0, t_grid, tol)?;
    let b = evolve_state(model, rho2, t0, t_grid, tol)?;
    // A growth smaller than this is integration noise.
    let noise = T::lit(10.0) * tol.rtol.max(tol.atol);

    let mut samples = Vec::with_capacity(t_grid.len());
    let mut intervals = Vec::new();
    let mut prev: Option<(T, T)> = None;
    let mut open: Option<T> = None;
    for ((&t, ra), rb) in t_grid.iter().zip(a).zip(b) {
        let d = match (ra, rb) {
            (Ok(x), Ok(y)) => Some(trace_distance(&x, &y)?),
            (Err(DynamicsError::SingularTime { .. }), _) | (_, Err(DynamicsError::SingularTime { .. })) => None,
            (Err(e), _) | (_, Err(e)) => return Err(e.into()),
        };
        let mut increasing = false;
        if let Some(d) = d {
            if let Some((tp, dp)) = prev {
                increasing = d > dp + noise;
                match (increasing, open) {
                    (true, None) => open = Some(tp),
                    (false, Some(s)) => {
                        intervals.push((s, tp));
                        open = None;
                    }
                    _ => {}
                }
            }
            prev = Some((t, d));
        }
        samples.push(BlpSample {
            t,
            d: d.unwrap_or_else(T::nan),
            increasing,
        });
    }
    if let (Some(s), Some((tp, _))) = (open, prev) {
        intervals.push((s, tp));
    }
    Ok(BlpTrace {
        samples,
        increase_intervals: intervals,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::measure::linspace;

    fn builtin(name: &str, pairs: &[(&str, f64)]) -> BuiltinModel {
        let p: BTreeMap<String, f64> = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        BuiltinModel::from_params(name, &p).unwrap()
    }

    #[test]
    fn distance_of_orthogonal_states() {
        let b = builtin("spin_bath", &[("N", 1.0)]);
        let (p, m) = default_blp_pair::<f64>(&b);
        assert!((trace_distance(&p, &m).unwrap() - 1.0).abs() < 1e-14);
        assert!(trace_distance(&p, &p).unwrap().abs() < 1e-14);
        assert!(trace_distance(&p, &CMatrix::identity(3)).is_err());
    }

    #[test]
    fn markovian_distance_never_grows() {
        let b = builtin("damped_jc", &[("R", 0.3)]);
        let (p, m) = default_blp_pair::<f64>(&b);
        let w = blp_witness(&b.model(), &p, &m, &linspace(0.0, 10.0, 51), &Default::default()).unwrap();
        assert!(w.increase_intervals.is_empty());
        assert!((w.samples[0].d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dephasing_revivals_detected() {
        // d(t) = |cos 2t| for N = 1: it grows again after t = π/4.
        let b = builtin("spin_bath", &[("N", 1.0)]);
        let (p, m) = default_blp_pair::<f64>(&b);
        let w = blp_witness(&b.model(), &p, &m, &linspace(0.0, 1.5, 31), &Default::default()).unwrap();
        for s in &w.samples {
            assert!((s.d - (2.0 * s.t).cos().abs()).abs() < 1e-7, "{s:?}");
        }
        assert_eq!(w.increase_intervals.len(), 1);
        let (a, e) = w.increase_intervals[0];
        assert!(a < std::f64::consts::FRAC_PI_4 + 0.1 && a > 0.6 && e == 1.5, "{a} {e}");
    }
}
