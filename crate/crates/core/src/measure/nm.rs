use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{ncp_grid, CellFlag, NcpGrid};
use super::ncp::{ncp_interval, DEFAULT_NEG_THRESHOLD};
use super::region::{representative_region, RepresentativeRegion};
use super::MeasureError;
use crate::dynamics::{BuiltinModel, IntegrationStats, IntegratorTolerances, TimeLocalModel};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmOptions {
    /// Cells across the region's `t₁` span (the `Δt` axis uses the same spacing).
    pub resolution: usize,
    /// Double the resolution until the estimate settles.
    pub refine: bool,
    pub max_refinements: usize,
    /// Relative change between successive refinements accepted as converged.
    pub rel_change: f64,
    pub neg_threshold: f64,
    pub tol: IntegratorTolerances<f64>,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            resolution: 100,
            refine: true,
            max_refinements: 4,
            rel_change: 5e-3,
            neg_threshold: DEFAULT_NEG_THRESHOLD,
            tol: IntegratorTolerances::fine(),
        }
    }
}

impl NmOptions {
    pub fn validate(&self) -> Result<(), MeasureError> {
        if self.resolution < 2 {
            return Err(MeasureError::InvalidGrid("resolution must be at least 2".into()));
        }
        if !(self.rel_change > 0.0) || !(self.neg_threshold >= 0.0) {
            return Err(MeasureError::InvalidGrid(
                "rel_change must be positive and neg_threshold non-negative".into(),
            ));
        }
        Ok(self.tol.validate()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub resolution: usize,
    pub nm: f64,
    pub support_fraction: f64,
}

/// Equal-weight average of the strictly positive cells of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmEstimate {
    pub nm: f64,
    /// Positive cells over cells with a value.
    pub support_fraction: f64,
    /// Cells with a value (`ok` or `singular_limit`).
    pub n_cells_total: usize,
    pub n_cells_positive: usize,
    pub n_cells_singular_limit: usize,
    pub n_cells_skipped: usize,
    pub n_cells_failed: usize,
    /// `None` when the model has no non-CP region (then `nm = 0`).
    pub region: Option<RepresentativeRegion>,
    pub resolution: usize,
    pub convergence: Vec<ConvergencePoint>,
    pub converged: bool,
    pub neg_threshold: f64,
    pub stats: IntegrationStats,
}

impl NmEstimate {
    /// The estimate for a model without non-CP intervals.
    pub fn markovian(neg_threshold: f64) -> Self {
        Self {
            nm: 0.0,
            support_fraction: 0.0,
            n_cells_total: 0,
            n_cells_positive: 0,
            n_cells_singular_limit: 0,
            n_cells_skipped: 0,
            n_cells_failed: 0,
            region: None,
            resolution: 0,
            convergence: Vec::new(),
            converged: true,
            neg_threshold,
            stats: IntegrationStats::default(),
        }
    }

    /// Relative change between the last two refinement levels.
    pub fn last_rel_change(&self) -> Option<f64> {
        let n = self.convergence.len();
        (n >= 2).then(|| rel_change(self.convergence[n - 2].nm, self.convergence[n - 1].nm))
    }
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs() / a.abs().max(b.abs())
    }
}

/// NM of a stored grid: the plain mean of all cells with `Ncp > 0`
/// (singular-limit cells included at `π/2`, valueless cells excluded),
/// summed in storage order.
pub fn nm_from_grid<T: Real>(grid: &NcpGrid<T>) -> NmEstimate {
    let mut sum = 0.0f64;
    let mut est = NmEstimate::markovian(grid.neg_threshold.to_f64_lossy());
    for (&v, &f) in grid.values.iter().zip(&grid.flags) {
        match f {
            CellFlag::SkippedGuard => est.n_cells_skipped += 1,
            CellFlag::Failed => est.n_cells_failed += 1,
            CellFlag::Ok | CellFlag::SingularLimit => {
                est.n_cells_total += 1;
                if f == CellFlag::SingularLimit {
                    est.n_cells_singular_limit += 1;
                }
                if v > T::zero() {
                    est.n_cells_positive += 1;
                    sum += v.to_f64_lossy();
                }
            }
        }
    }
    if est.n_cells_positive > 0 {
        est.nm = sum / est.n_cells_positive as f64;
    }
    if est.n_cells_total > 0 {
        est.support_fraction = est.n_cells_positive as f64 / est.n_cells_total as f64;
    }
    est.resolution = grid.t1_axis.len();
    est.stats = grid.stats;
    est
}

/// [`nm_estimate`] that also returns the grid of the final resolution.
pub fn nm_estimate_with_grid<T: Real>(
    model: &TimeLocalModel<T>,
    region: &RepresentativeRegion,
    opts: &NmOptions,
) -> Result<(NmEstimate, NcpGrid<T>), MeasureError> {
    opts.validate()?;
    let tol = IntegratorTolerances {
        rtol: T::lit(opts.tol.rtol),
        atol: T::lit(opts.tol.atol),
        h_min: T::lit(opts.tol.h_min),
        max_steps: opts.tol.max_steps,
    };
    let thr = T::lit(opts.neg_threshold);
    let mut n = opts.resolution;
    let mut convergence = Vec::new();
    let mut stats = IntegrationStats::default();
    let mut converged = !opts.refine;
    loop {
        let (t1, dt) = region.axes::<T>(n);
        let grid = ncp_grid(model, &t1, &dt, &tol, thr)?;
        let est = nm_from_grid(&grid);
        stats.merge(&est.stats);
        convergence.push(ConvergencePoint {
            resolution: n,
            nm: est.nm,
            support_fraction: est.support_fraction,
        });
        let k = convergence.len();
        if opts.refine && k >= 2 && rel_change(convergence[k - 2].nm, convergence[k - 1].nm) < opts.rel_change {
            converged = true;
        }
        if converged || !opts.refine || k > opts.max_refinements {
            if region.expects_support && est.n_cells_positive == 0 {
                return Err(MeasureError::RegionTooCoarse { resolution: n });
            }
            let est = NmEstimate {
                region: Some(*region),
                convergence,
                converged,
                stats,
                ..est
            };
            return Ok((est, grid));
        }
        n *= 2;
    }
}

/// NM over `region`: equal-weight mean of the positive cells, optionally
/// refined by doubling the resolution until the relative change drops
/// below `opts.rel_change` (at most `opts.max_refinements` doublings).
pub fn nm_estimate<T: Real>(
    model: &TimeLocalModel<T>,
    region: &RepresentativeRegion,
    opts: &NmOptions,
) -> Result<NmEstimate, MeasureError> {
    Ok(nm_estimate_with_grid(model, region, opts)?.0)
}

/// Uniform-random cross-check of the grid estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomNmEstimate {
    pub nm: f64,
    pub support_fraction: f64,
    pub n_samples: usize,
    pub n_positive: usize,
    pub n_skipped: usize,
    /// Standard error of the mean over positive samples.
    pub std_error: f64,
    pub seed: u64,
}

/// NM from `n_samples` uniformly random `(t₁, Δt)` in `region`; identical
/// for identical seeds.
pub fn nm_random(
    model: &TimeLocalModel<f64>,
    region: &RepresentativeRegion,
    n_samples: usize,
    seed: u64,
    opts: &NmOptions,
) -> Result<RandomNmEstimate, MeasureError> {
    opts.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(f64, f64)> = (0..n_samples)
        .map(|_| {
            let t1 = rng.gen_range(region.t1_start..region.t1_end);
            // (0, dt_max]
            let dt = region.dt_max * (1.0 - rng.gen::<f64>());
            (t1, dt)
        })
        .collect();
    let values: Vec<Option<f64>> = samples
        .par_iter()
        .map(|&(t1, dt)| {
            ncp_interval(model, t1, t1 + dt, &opts.tol, opts.neg_threshold)
                .ok()
                .map(|v| v.value)
        })
        .collect();
    let positive: Vec<f64> = values.iter().flatten().copied().filter(|&v| v > 0.0).collect();
    let counted = values.iter().flatten().count();
    let n_pos = positive.len();
    let nm = if n_pos > 0 {
        positive.iter().sum::<f64>() / n_pos as f64
    } else {
        0.0
    };
    let var = if n_pos > 1 {
        positive.iter().map(|v| (v - nm).powi(2)).sum::<f64>() / (n_pos - 1) as f64
    } else {
        0.0
    };
    Ok(RandomNmEstimate {
        nm,
        support_fraction: if counted > 0 {
            n_pos as f64 / counted as f64
        } else {
            0.0
        },
        n_samples,
        n_positive: n_pos,
        n_skipped: n_samples - counted,
        std_error: if n_pos > 0 { (var / n_pos as f64).sqrt() } else { 0.0 },
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub estimate: Option<NmEstimate>,
    pub error: Option<String>,
}

/// Shape of `NM(param)` over the successful points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDiagnostics {
    pub nondecreasing: bool,
    /// Largest drop between consecutive points (0 when nondecreasing).
    pub max_decrease: f64,
    pub argmax: Option<f64>,
    pub first_positive: Option<f64>,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub param: String,
    pub points: Vec<SweepPoint>,
    pub diagnostics: SweepDiagnostics,
}

fn sweep_point(base: &BuiltinModel, param: &str, value: f64, opts: &NmOptions) -> Result<NmEstimate, MeasureError> {
    let b = base.with_param(param, value)?;
    match representative_region(&b, &opts.tol) {
        Ok(region) => nm_estimate(&b.model::<f64>(), &region, opts),
        Err(MeasureError::NotApplicable(_)) => Ok(NmEstimate::markovian(opts.neg_threshold)),
        Err(e) => Err(e),
    }
}

/// Independent NM estimates of `base` with `param` set to each of `values`,
/// evaluated in parallel and reported in input order. Failures are
/// recorded per point.
pub fn nm_sweep(
    base: &BuiltinModel,
    param: &str,
    values: &[f64],
    opts: &NmOptions,
) -> Result<SweepResult, MeasureError> {
    opts.validate()?;
    let points: Vec<SweepPoint> = values
        .par_iter()
        .map(|&v| match sweep_point(base, param, v, opts) {
            Ok(e) => SweepPoint {
                value: v,
                estimate: Some(e),
                error: None,
            },
            Err(e) => SweepPoint {
                value: v,
                estimate: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let ok: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.estimate.as_ref().map(|e| (p.value, e.nm)))
        .collect();
    let max_decrease = ok.windows(2).map(|w| (w[0].1 - w[1].1).max(0.0)).fold(0.0, f64::max);
    let argmax = ok
        .iter()
        .filter(|p| p.1 > 0.0)
        .fold(None::<(f64, f64)>, |best, &p| match best {
            Some(b) if b.1 >= p.1 => Some(b),
            _ => Some(p),
        })
        .map(|p| p.0);
    let diagnostics = SweepDiagnostics {
        nondecreasing: max_decrease == 0.0,
        max_decrease,
        argmax,
        first_positive: ok.iter().find(|p| p.1 > 0.0).map(|p| p.0),
        n_failed: points.len() - ok.len(),
    };
    Ok(SweepResult {
        param: param.to_string(),
        points,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::dynamics::builtin_model;
    use crate::measure::region::RegionRationale;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn grid_average_counts() {
        let m = builtin_model::<f64>("spin_bath", &params(&[("N", 1.0)])).unwrap();
        let pi = std::f64::consts::PI;
        let g = ncp_grid(
            &m,
            &[0.1, pi / 4.0],
            &[0.0, pi / 4.0 - 0.1, 1.0],
            &Default::default(),
            1e-10,
        )
        .unwrap();
        let e = nm_from_grid(&g);
        assert_eq!(e.n_cells_skipped, 1);
        assert_eq!(e.n_cells_singular_limit, 2);
        assert_eq!(e.n_cells_total, 5);
        let pos: Vec<f64> = g
            .cells()
            .filter(|c| c.3.has_value() && c.2 > 0.0)
            .map(|c| c.2)
            .collect();
        assert_eq!(e.n_cells_positive, pos.len());
        assert_eq!(e.nm, pos.iter().sum::<f64>() / pos.len() as f64);
        assert!(e.nm <= g.max_value());
    }

    #[test]
    fn markovian_region_estimate_is_zero() {
        let m = builtin_model::<f64>("damped_jc", &params(&[("R", 0.3)])).unwrap();
        let r = RepresentativeRegion::new(0.0, 5.0, 5.0, RegionRationale::Bounded).unwrap();
        let opts = NmOptions {
            resolution: 10,
            ..Default::default()
        };
        let e = nm_estimate(&m, &r, &opts).unwrap();
        assert_eq!(e.nm, 0.0);
        assert_eq!(e.n_cells_positive, 0);
        assert!(e.converged);
        assert_eq!(e.convergence.len(), 2);
    }

    #[test]
    fn too_coarse_region_reported() {
        let m = builtin_model::<f64>("damped_jc", &params(&[("R", 0.3)])).unwrap();
        let mut r = RepresentativeRegion::new(0.0, 1.0, 1.0, RegionRationale::Bounded).unwrap();
        r.expects_support = true;
        let opts = NmOptions {
            resolution: 4,
            refine: false,
            ..Default::default()
        };
        assert!(matches!(
            nm_estimate(&m, &r, &opts),
            Err(MeasureError::RegionTooCoarse { .. })
        ));
    }

    #[test]
    fn spin_bath_coarse_estimate() {
        let b = BuiltinModel::from_params("spin_bath", &params(&[("N", 1.0)])).unwrap();
        let r = representative_region(&b, &Default::default()).unwrap();
        let opts = NmOptions {
            resolution: 40,
            refine: false,
            ..Default::default()
        };
        let e = nm_estimate(&b.model::<f64>(), &r, &opts).unwrap();
        assert!(e.nm > 0.4 && e.nm < 0.6, "{}", e.nm);
        assert!(e.support_fraction > 0.0 && e.support_fraction < 1.0);
        let rnd = nm_random(&b.model(), &r, 400, 7, &opts).unwrap();
        assert_eq!(rnd, nm_random(&b.model(), &r, 400, 7, &opts).unwrap());
        assert!((rnd.nm - e.nm).abs() < 0.15, "{} vs {}", rnd.nm, e.nm);
    }

    #[test]
    fn sweep_records_markovian_points_and_failures() {
        let b = BuiltinModel::from_params("damped_jc", &params(&[("R", 0.3)])).unwrap();
        let opts = NmOptions {
            resolution: 8,
            refine: false,
            ..Default::default()
        };
        let s = nm_sweep(&b, "R", &[0.1, 0.4, -1.0], &opts).unwrap();
        assert_eq!(s.points[0].estimate.as_ref().unwrap().nm, 0.0);
        assert!(s.points[2].error.is_some());
        assert_eq!(s.diagnostics.n_failed, 1);
        assert!(s.diagnostics.nondecreasing);
        assert_eq!(s.diagnostics.first_positive, None);
    }
}
