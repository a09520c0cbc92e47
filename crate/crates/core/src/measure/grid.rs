use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ncp::ncp;
use super::MeasureError;
use crate::dynamics::{
    propagate_many, DynamicsError, IntegrationStats, IntegratorTolerances, ModelDescriptor, TimeLocalModel,
};
use crate::scalar::Real;

/// How a grid cell's value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFlag {
    Ok,
    /// `t₁` inside a guard window of a divergent singular time: value `π/2`.
    SingularLimit,
    /// Endpoint inside a guard window without a limit verdict: no value.
    SkippedGuard,
    /// Integration failed: no value.
    Failed,
}

impl CellFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellFlag::Ok => "ok",
            CellFlag::SingularLimit => "singular_limit",
            CellFlag::SkippedGuard => "skipped_guard",
            CellFlag::Failed => "failed",
        }
    }

    /// Whether the cell carries a value that enters averages.
    pub fn has_value(&self) -> bool {
        matches!(self, CellFlag::Ok | CellFlag::SingularLimit)
    }
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / T::from_usize(n - 1).unwrap();
            (0..n).map(|i| a + h * T::from_usize(i).unwrap()).collect()
        }
    }
}

/// Centres of `n` equal cells partitioning `[a, b)`.
pub fn midpoints<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    let h = (b - a) / T::from_usize(n).unwrap();
    (0..n)
        .map(|i| a + h * (T::from_usize(i).unwrap() + T::lit(0.5)))
        .collect()
}

/// `Ncp(t₁, t₁ + Δt)` sampled on a rectangular grid, stored `t₁`-major.
///
/// Cells without a value (`skipped_guard`, `failed`) hold NaN.
#[derive(Debug, Clone, Serialize)]
pub struct NcpGrid<T> {
    pub model: ModelDescriptor,
    pub t1_axis: Vec<T>,
    pub dt_axis: Vec<T>,
    pub values: Vec<T>,
    pub flags: Vec<CellFlag>,
    pub neg_threshold: T,
    pub stats: IntegrationStats,
    /// First error message of each failed row, with its `t₁`.
    pub failures: Vec<(T, String)>,
}

impl<T: Real> NcpGrid<T> {
    pub fn shape(&self) -> (usize, usize) {
        (self.t1_axis.len(), self.dt_axis.len())
    }

    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[i * self.dt_axis.len() + j]
    }

    pub fn flag(&self, i: usize, j: usize) -> CellFlag {
        self.flags[i * self.dt_axis.len() + j]
    }

    /// `(t₁, Δt, value, flag)` in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (T, T, T, CellFlag)> + '_ {
        let nd = self.dt_axis.len();
        self.values
            .iter()
            .zip(&self.flags)
            .enumerate()
            .map(move |(k, (&v, &f))| (self.t1_axis[k / nd], self.dt_axis[k % nd], v, f))
    }

    pub fn count(&self, flag: CellFlag) -> usize {
        self.flags.iter().filter(|&&f| f == flag).count()
    }

    /// Largest value over cells that carry one.
    pub fn max_value(&self) -> T {
        self.cells()
            .filter(|c| c.3.has_value())
            .map(|c| c.2)
            .fold(T::zero(), T::max)
    }

    /// Whether row `i` has any cell with `Ncp > 0`.
    pub fn row_positive(&self, i: usize) -> bool {
        (0..self.dt_axis.len()).any(|j| self.flag(i, j).has_value() && self.value(i, j) > T::zero())
    }
}

fn check_axis<T: Real>(axis: &[T], name: &str) -> Result<(), MeasureError> {
    if axis.is_empty() {
        return Err(MeasureError::InvalidGrid(format!("{name} axis is empty")));
    }
    if axis.iter().any(|x| !x.is_finite() || *x < T::zero()) {
        return Err(MeasureError::InvalidGrid(format!(
            "{name} axis must be finite and non-negative"
        )));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MeasureError::InvalidGrid(format!(
            "{name} axis must be strictly increasing"
        )));
    }
    Ok(())
}

struct Row<T> {
    values: Vec<T>,
    flags: Vec<CellFlag>,
    stats: IntegrationStats,
    failure: Option<String>,
}

fn row<T: Real>(
    model: &TimeLocalModel<T>,
    t1: T,
    dt_axis: &[T],
    tol: &IntegratorTolerances<T>,
    neg_threshold: T,
) -> Row<T> {
    let n = dt_axis.len();
    let mut r = Row {
        values: vec![T::nan(); n],
        flags: vec![CellFlag::Failed; n],
        stats: IntegrationStats::default(),
        failure: None,
    };
    // Δt = 0 is the identity map.
    let first = dt_axis.iter().take_while(|&&d| d == T::zero()).count();
    for j in 0..first {
        r.values[j] = T::zero();
        r.flags[j] = CellFlag::Ok;
    }
    let t2s: Vec<T> = dt_axis[first..].iter().map(|&d| t1 + d).collect();

    if model.check_regular(t1).is_err() {
        for (j, &t2) in t2s.iter().enumerate() {
            let k = first + j;
            if model.check_regular(t2).is_ok() && model.limit_diverges() {
                r.values[k] = T::FRAC_PI_2();
                r.flags[k] = CellFlag::SingularLimit;
            } else {
                r.flags[k] = CellFlag::SkippedGuard;
            }
        }
        return r;
    }
    let results = match propagate_many(model, t1, &t2s, tol) {
        Ok(res) => res,
        Err(e) => {
            r.failure = Some(e.to_string());
            return r;
        }
    };
    for (j, res) in results.into_iter().enumerate() {
        let k = first + j;
        match res {
            Ok(p) => {
                r.stats = p.stats;
                match ncp(&p.choi(), neg_threshold) {
                    Ok(v) => {
                        r.values[k] = v;
                        r.flags[k] = CellFlag::Ok;
                    }
                    Err(e) => {
                        r.failure.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            Err(DynamicsError::SingularTime { .. }) => r.flags[k] = CellFlag::SkippedGuard,
            Err(e) => {
                r.failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    r
}

/// Evaluates `Ncp(t₁, t₁ + Δt)` over `t1_axis × dt_axis`.
///
/// Rows are integrated independently (one forward sweep per `t₁`) and in
/// parallel; the result does not depend on the number of threads. Cell
/// failures are recorded in the flags rather than returned as errors.
pub fn ncp_grid<T: Real>(
    model: &TimeLocalModel<T>,
    t1_axis: &[T],
    dt_axis: &[T],
    tol: &IntegratorTolerances<T>,
    neg_threshold: T,
) -> Result<NcpGrid<T>, MeasureError> {
    check_axis(t1_axis, "t1")?;
    check_axis(dt_axis, "dt")?;
    tol.validate()?;
    if !(neg_threshold >= T::zero()) {
        return Err(MeasureError::InvalidGrid("neg_threshold must be non-negative".into()));
    }
    let rows: Vec<Row<T>> = t1_axis
        .par_iter()
        .map(|&t1| row(model, t1, dt_axis, tol, neg_threshold))
        .collect();
    let mut grid = NcpGrid {
        model: model.descriptor().clone(),
        t1_axis: t1_axis.to_vec(),
        dt_axis: dt_axis.to_vec(),
        values: Vec::with_capacity(t1_axis.len() * dt_axis.len()),
        flags: Vec::with_capacity(t1_axis.len() * dt_axis.len()),
        neg_threshold,
        stats: IntegrationStats::default(),
        failures: Vec::new(),
    };
    for (r, &t1) in rows.into_iter().zip(t1_axis) {
        grid.values.extend(r.values);
        grid.flags.extend(r.flags);
        grid.stats.merge(&r.stats);
        if let Some(f) = r.failure {
            grid.failures.push((t1, f));
        }
    }
    Ok(grid)
}
