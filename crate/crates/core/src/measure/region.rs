use serde::{Deserialize, Serialize};

use super::grid::{linspace, ncp_grid};
use super::{MeasureError, DEFAULT_NEG_THRESHOLD};
use crate::dynamics::{BuiltinModel, IntegratorTolerances, SingularTimes};
use crate::scalar::Real;

/// Ncp above which a pre-scan cell counts as part of the support.
pub const PRESCAN_THRESHOLD: f64 = 1e-8;
/// Pre-scan window `[0, 10/λ]²` sampled every `0.1/λ`.
const PRESCAN_SPAN: f64 = 10.0;
const PRESCAN_CELLS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionRationale {
    /// One period of a periodic Ncp pattern.
    Periodic,
    /// Bounding box of a finite support.
    Bounded,
    /// One period in `t₁`, `Δt` cut off where the support has decayed.
    Truncated,
}

/// Area of the `(t₁, Δt)` plane averaged over: `t₁ ∈ [t1_start, t1_end)`,
/// `Δt ∈ (0, dt_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeRegion {
    pub t1_start: f64,
    pub t1_end: f64,
    pub dt_max: f64,
    pub rationale: RegionRationale,
    /// Whether the model is known to have non-CP intervals here.
    pub expects_support: bool,
}

impl RepresentativeRegion {
    pub fn new(t1_start: f64, t1_end: f64, dt_max: f64, rationale: RegionRationale) -> Result<Self, MeasureError> {
        let ok = t1_start.is_finite() && t1_end.is_finite() && dt_max.is_finite();
        if !ok || t1_start < 0.0 || t1_end <= t1_start || dt_max <= 0.0 {
            return Err(MeasureError::InvalidGrid(format!(
                "region needs 0 ≤ t1_start < t1_end and dt_max > 0 (got [{t1_start}, {t1_end}), {dt_max})"
            )));
        }
        Ok(Self {
            t1_start,
            t1_end,
            dt_max,
            rationale,
            expects_support: false,
        })
    }

    /// Number of `Δt` columns for `n` rows at equal spacing in both axes.
    pub fn dt_cells(&self, n: usize) -> usize {
        let ratio = self.dt_max / (self.t1_end - self.t1_start);
        ((n as f64 * ratio).round() as usize).max(1)
    }

    /// Grid at resolution `n`: `n` cell centres in `t₁`, and `Δt = j·h`
    /// for `j = 1..=m` with the matching spacing.
    pub fn axes<T: Real>(&self, n: usize) -> (Vec<T>, Vec<T>) {
        let h = (self.t1_end - self.t1_start) / n as f64;
        let t1 = (0..n).map(|i| T::lit(self.t1_start + (i as f64 + 0.5) * h)).collect();
        let m = self.dt_cells(n);
        let hd = self.dt_max / m as f64;
        let dt = (1..=m).map(|j| T::lit(j as f64 * hd)).collect();
        (t1, dt)
    }
}

fn first_singular(s: &SingularTimes<f64>) -> Option<(f64, f64)> {
    match *s {
        SingularTimes::Periodic { first, period } => Some((first, period)),
        _ => None,
    }
}

fn damped_region(b: &BuiltinModel) -> Result<RepresentativeRegion, MeasureError> {
    let m = b.model::<f64>();
    let Some((t0, p)) = first_singular(m.singular_times()) else {
        return Err(MeasureError::NotApplicable(format!(
            "{} is Markovian for these parameters (R ≤ 1/2)",
            m.descriptor()
        )));
    };
    // Anchored at a zero of c(t) so every resolution samples the same
    // phase of the pattern; the positive area decays within a few periods.
    let mut r = RepresentativeRegion::new(t0, t0 + p, 3.0 * p, RegionRationale::Truncated)?;
    r.expects_support = true;
    Ok(r)
}

/// The averaging area for a built-in model.
///
/// * `spin_bath`: one period `(π/2)√N/A` in both `t₁` and `Δt`.
/// * `damped_jc` with `R > ½`: one period `2π/|d|` in `t₁` starting at the
///   first zero of `c(t)`, and `Δt` up to three periods.
/// * `detuned_jc`: bounding box (padded by one pre-scan cell) of the cells
///   with `Ncp > 1e-8` on a `[0, 10/λ]²` pre-scan; on resonance as `damped_jc`.
///
/// Markovian parameters (no non-CP intervals) give `NotApplicable`.
pub fn representative_region(
    model: &BuiltinModel,
    tol: &IntegratorTolerances<f64>,
) -> Result<RepresentativeRegion, MeasureError> {
    match model {
        BuiltinModel::SpinBath(_) => {
            let p = model.period().expect("spin bath is periodic");
            let mut r = RepresentativeRegion::new(0.0, p, p, RegionRationale::Periodic)?;
            r.expects_support = true;
            Ok(r)
        }
        BuiltinModel::DampedJc(_) => damped_region(model),
        BuiltinModel::DetunedJc(p) if p.delta == 0.0 => damped_region(model),
        BuiltinModel::DetunedJc(p) => {
            let span = PRESCAN_SPAN / p.lambda;
            let h = span / PRESCAN_CELLS as f64;
            let t1 = linspace(0.0, span, PRESCAN_CELLS + 1);
            let dt = linspace(h, span, PRESCAN_CELLS);
            let g = ncp_grid(&model.model::<f64>(), &t1, &dt, tol, DEFAULT_NEG_THRESHOLD)?;
            let mut t1_hi: Option<(f64, f64)> = None;
            let mut dt_hi = 0.0f64;
            for (a, d, v, f) in g.cells() {
                if f.has_value() && v > PRESCAN_THRESHOLD {
                    t1_hi = Some(t1_hi.map_or((a, a), |(lo, hi)| (lo.min(a), hi.max(a))));
                    dt_hi = dt_hi.max(d);
                }
            }
            let Some((lo, hi)) = t1_hi else {
                return Err(MeasureError::NotApplicable(format!(
                    "no interval of {} exceeds Ncp = {PRESCAN_THRESHOLD:e} on the pre-scan",
                    g.model
                )));
            };
            let mut r = RepresentativeRegion::new((lo - h).max(0.0), hi + h, dt_hi + h, RegionRationale::Bounded)?;
            r.expects_support = true;
            Ok(r)
        }
    }
}
