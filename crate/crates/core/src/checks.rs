//! Oracle-equivalence and invariant suites for the built-in models, shared
//! by the `check` command and the test targets.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::oracles::{oracle_choi_spinbath, oracle_k_spinbath};
use crate::dynamics::superop::unitary_superop;
use crate::dynamics::{
    choi_of_interval, choi_via_ancilla, propagate_many, BuiltinModel, DynamicsError, IntegratorTolerances,
    ModelDescriptor, PropagatorMatrix, TimeLocalModel,
};
use crate::measure::{midpoints, ncp, ncp_grid, CellFlag, MeasureError, DEFAULT_NEG_THRESHOLD};
use crate::qmat::{min_eigenvalue, paulis, CMatrix};
use crate::scalar::cx;

pub const ORACLE_NCP_TOL: f64 = 1e-6;
pub const ORACLE_CHOI_TOL: f64 = 1e-8;
pub const COMPOSITION_TOL: f64 = 1e-7;
pub const CP_TOL: f64 = 1e-7;
pub const MARGINAL_TOL: f64 = 1e-8;
pub const ANCILLA_TOL: f64 = 1e-8;
pub const UNITARY_TOL: f64 = 1e-10;

/// `|a − b|` entrywise, relative for entries of magnitude above 1.
///
/// Propagators and Choi states of intervals starting near a singular time
/// have entries of order `1/|c(t₁)|`; beyond 1 only relative accuracy is
/// meaningful. For entries up to 1 this is the plain absolute deviation.
pub fn scaled_deviation(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm() / y.norm().max(1.0))
        .fold(0.0, f64::max)
}

/// Result of one property over its samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub samples: usize,
    /// Samples excluded because they fall inside a singular guard.
    pub skipped: usize,
    pub passed: bool,
    pub detail: Option<String>,
}

impl CheckOutcome {
    fn new(name: &str, max_deviation: f64, tolerance: f64, samples: usize, skipped: usize) -> Self {
        Self {
            name: name.to_string(),
            max_deviation,
            tolerance,
            samples,
            skipped,
            // NaN deviations fail.
            passed: max_deviation <= tolerance && samples > 0,
            detail: None,
        }
    }

    fn failed(name: &str, tolerance: f64, err: impl ToString) -> Self {
        Self {
            name: name.to_string(),
            max_deviation: f64::NAN,
            tolerance,
            samples: 0,
            skipped: 0,
            passed: false,
            detail: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub model: ModelDescriptor,
    pub outcomes: Vec<CheckOutcome>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOptions {
    /// Samples per axis of the oracle grids.
    pub grid: usize,
    /// Sample times of the invariant checks.
    pub times: usize,
    pub tol: IntegratorTolerances<f64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            grid: 30,
            times: 8,
            tol: IntegratorTolerances::precise(),
        }
    }
}

/// Time span the checks sample: one period, or `10/λ` for the
/// off-resonant cavity.
pub fn check_window(b: &BuiltinModel) -> f64 {
    match b {
        BuiltinModel::DetunedJc(p) if b.period().is_none() => 10.0 / p.lambda,
        _ => b.period().unwrap_or(10.0),
    }
}

fn in_guard(m: &TimeLocalModel<f64>, t: f64) -> bool {
    m.check_regular(t).is_err()
}

/// Numeric Ncp against the closed form on an `n×n` grid of
/// `t₁ ∈ [0, W)`, `Δt ∈ (0, W]`, guard cells excluded.
pub fn oracle_ncp_check(b: &BuiltinModel, n: usize, tol: &IntegratorTolerances<f64>) -> CheckOutcome {
    const NAME: &str = "oracle_ncp";
    let w = check_window(b);
    let m = b.model::<f64>();
    let t1 = midpoints(0.0, w, n);
    let dt: Vec<f64> = (1..=n).map(|j| j as f64 * w / n as f64).collect();
    let g = match ncp_grid(&m, &t1, &dt, tol, DEFAULT_NEG_THRESHOLD) {
        Ok(g) => g,
        Err(e) => return CheckOutcome::failed(NAME, ORACLE_NCP_TOL, e),
    };
    let mut dev = 0.0f64;
    let (mut samples, mut skipped) = (0, 0);
    for (a, d, v, f) in g.cells() {
        if f != CellFlag::Ok || in_guard(&m, a) || in_guard(&m, a + d) {
            skipped += 1;
            continue;
        }
        match b.oracle_ncp(a, a + d) {
            Ok(o) if !o.singular_limit => {
                dev = dev.max((v - o.value).abs());
                samples += 1;
            }
            _ => skipped += 1,
        }
    }
    let mut out = CheckOutcome::new(NAME, dev, ORACLE_NCP_TOL, samples, skipped);
    if let Some((t, e)) = g.failures.first() {
        out.passed = false;
        out.detail = Some(format!("t1 = {t}: {e}"));
    }
    out
}

/// Numeric Choi state of the spin bath against the closed-form dephasing
/// Choi state, entrywise, on the same grid as [`oracle_ncp_check`].
pub fn oracle_choi_check(b: &BuiltinModel, n: usize, tol: &IntegratorTolerances<f64>) -> CheckOutcome {
    const NAME: &str = "oracle_choi";
    let BuiltinModel::SpinBath(p) = b else {
        return CheckOutcome::failed(NAME, ORACLE_CHOI_TOL, "closed-form Choi state only for spin_bath");
    };
    let w = check_window(b);
    let m = b.model::<f64>();
    let rows: Vec<Result<(f64, usize, usize), DynamicsError>> = midpoints(0.0, w, n)
        .par_iter()
        .map(|&t1| {
            let t2s: Vec<f64> = (1..=n).map(|j| t1 + j as f64 * w / n as f64).collect();
            if in_guard(&m, t1) {
                return Ok((0.0, 0, n));
            }
            let mut acc = (0.0f64, 0, 0);
            for (r, &t2) in propagate_many(&m, t1, &t2s, tol)?.into_iter().zip(&t2s) {
                if in_guard(&m, t2) {
                    acc.2 += 1;
                    continue;
                }
                let choi = r?.choi();
                let k = oracle_k_spinbath(p, t1, t2)?;
                acc.0 = acc.0.max(scaled_deviation(&choi.matrix, &oracle_choi_spinbath(k)));
                acc.1 += 1;
            }
            Ok(acc)
        })
        .collect();
    let mut total = (0.0f64, 0, 0);
    for r in rows {
        match r {
            Ok((d, s, k)) => total = (total.0.max(d), total.1 + s, total.2 + k),
            Err(e) => return CheckOutcome::failed(NAME, ORACLE_CHOI_TOL, e),
        }
    }
    CheckOutcome::new(NAME, total.0, ORACLE_CHOI_TOL, total.1, total.2)
}

/// `times` sample points in `(0, 1.5·W)` at least `W/50` away from any
/// singular time.
pub fn regular_times(b: &BuiltinModel, times: usize) -> Vec<f64> {
    let w = check_window(b);
    let m = b.model::<f64>();
    let margin = 0.02 * w;
    midpoints(0.0, 1.5 * w, times)
        .into_iter()
        .filter(|&t| m.singular_times().guarding(t, margin).is_none())
        .collect()
}

fn propagators(
    m: &TimeLocalModel<f64>,
    t1: f64,
    t2s: &[f64],
    tol: &IntegratorTolerances<f64>,
) -> Result<Vec<PropagatorMatrix<f64>>, DynamicsError> {
    propagate_many(m, t1, t2s, tol)?.into_iter().collect()
}

/// Scaled `‖Φ(t₃,t₁) − Φ(t₃,t₂)Φ(t₂,t₁)‖_max` over ordered triples of `ts`.
pub fn composition_check(m: &TimeLocalModel<f64>, ts: &[f64], tol: &IntegratorTolerances<f64>) -> CheckOutcome {
    const NAME: &str = "composition";
    let from: Result<Vec<Vec<PropagatorMatrix<f64>>>, DynamicsError> = ts
        .par_iter()
        .enumerate()
        .map(|(i, &t)| propagators(m, t, &ts[i + 1..], tol))
        .collect();
    let from = match from {
        Ok(f) => f,
        Err(e) => return CheckOutcome::failed(NAME, COMPOSITION_TOL, e),
    };
    // from[i][j - i - 1] = Φ(t_j, t_i)
    let phi = |i: usize, j: usize| &from[i][j - i - 1].matrix;
    let (mut dev, mut samples) = (0.0f64, 0);
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            for k in j + 1..ts.len() {
                let composed = phi(j, k) * phi(i, j);
                dev = dev.max(scaled_deviation(&composed, phi(i, k)));
                samples += 1;
            }
        }
    }
    CheckOutcome::new(NAME, dev, COMPOSITION_TOL, samples, 0)
}

/// Complete positivity of `Λ(t, 0)` (minimum Choi eigenvalue ≥ −tol) and
/// the marginal `Tr_S ρ_Λ = I/d` at each `t`.
pub fn full_interval_checks(m: &TimeLocalModel<f64>, ts: &[f64], tol: &IntegratorTolerances<f64>) -> [CheckOutcome; 2] {
    let ps = match propagators(m, 0.0, ts, tol) {
        Ok(p) => p,
        Err(e) => {
            return [
                CheckOutcome::failed("cp_full_interval", CP_TOL, &e),
                CheckOutcome::failed("choi_marginal", MARGINAL_TOL, &e),
            ]
        }
    };
    let mut neg = 0.0f64;
    let mut marg = 0.0f64;
    for p in &ps {
        let c = p.choi();
        match min_eigenvalue(&c.matrix) {
            Ok(l) => neg = neg.max(-l),
            Err(e) => {
                return [
                    CheckOutcome::failed("cp_full_interval", CP_TOL, &e),
                    CheckOutcome::failed("choi_marginal", MARGINAL_TOL, &e),
                ]
            }
        }
        marg = marg.max(c.diagnostics().marginal_error);
    }
    [
        CheckOutcome::new("cp_full_interval", neg.max(0.0), CP_TOL, ps.len(), 0),
        CheckOutcome::new("choi_marginal", marg, MARGINAL_TOL, ps.len(), 0),
    ]
}

/// A fixed qubit rotation `exp(−iθ n·σ)` with a generic axis.
pub fn test_unitary() -> CMatrix<f64> {
    let (theta, n) = (0.7f64, [0.48f64, -0.6, 0.64]);
    let gen = &(&paulis::sigma_x::<f64>().scale_real(n[0]) + &paulis::sigma_y().scale_real(n[1]))
        + &paulis::sigma_z().scale_real(n[2]);
    &CMatrix::identity(2).scale_real(theta.cos()) + &gen.scale(cx(0.0, -theta.sin()))
}

/// `|Ncp(UΛU†) − Ncp(Λ)|` over consecutive pairs of `ts`.
pub fn unitary_invariance_check(
    m: &TimeLocalModel<f64>,
    ts: &[f64],
    u: &CMatrix<f64>,
    tol: &IntegratorTolerances<f64>,
) -> CheckOutcome {
    const NAME: &str = "unitary_invariance";
    let us = unitary_superop(u);
    let mut dev = 0.0f64;
    for w in ts.windows(2) {
        let r = propagators(m, w[0], &w[1..], tol)
            .map_err(MeasureError::from)
            .and_then(|p| {
                let p = &p[0];
                let conj = PropagatorMatrix {
                    matrix: &us * &p.matrix,
                    ..p.clone()
                };
                Ok((
                    ncp(&p.choi(), DEFAULT_NEG_THRESHOLD)?,
                    ncp(&conj.choi(), DEFAULT_NEG_THRESHOLD)?,
                ))
            });
        match r {
            Ok((a, b)) => dev = dev.max((a - b).abs()),
            Err(e) => return CheckOutcome::failed(NAME, UNITARY_TOL, e),
        }
    }
    CheckOutcome::new(NAME, dev, UNITARY_TOL, ts.len().saturating_sub(1), 0)
}

/// Choi state from evolving `|φ⟩⟨φ|` on system + ancilla against the
/// reshuffled propagator, for the given `(t₁, t₂)` pairs.
pub fn ancilla_check(m: &TimeLocalModel<f64>, pairs: &[(f64, f64)], tol: &IntegratorTolerances<f64>) -> CheckOutcome {
    const NAME: &str = "ancilla_equivalence";
    let mut dev = 0.0f64;
    for &(t1, t2) in pairs {
        let r = choi_of_interval(m, t1, t2, tol).and_then(|a| Ok((a, choi_via_ancilla(m, t1, t2, tol)?)));
        match r {
            Ok((a, b)) => dev = dev.max(scaled_deviation(&b.matrix, &a.matrix)),
            Err(e) => return CheckOutcome::failed(NAME, ANCILLA_TOL, e),
        }
    }
    CheckOutcome::new(NAME, dev, ANCILLA_TOL, pairs.len(), 0)
}

/// The full suite for one built-in model.
pub fn run_checks(b: &BuiltinModel, opts: &CheckOptions) -> CheckReport {
    let m = b.model::<f64>();
    let ts = regular_times(b, opts.times);
    let mut outcomes = vec![oracle_ncp_check(b, opts.grid, &opts.tol)];
    if matches!(b, BuiltinModel::SpinBath(_)) {
        outcomes.push(oracle_choi_check(b, opts.grid, &opts.tol));
    }
    outcomes.push(composition_check(&m, &ts, &opts.tol));
    outcomes.extend(full_interval_checks(&m, &ts, &opts.tol));
    outcomes.push(unitary_invariance_check(&m, &ts, &test_unitary(), &opts.tol));
    let pairs: Vec<(f64, f64)> = ts.windows(2).map(|w| (w[0], w[1])).collect();
    outcomes.push(ancilla_check(&m, &pairs, &opts.tol));
    CheckReport {
        model: m.descriptor().clone(),
        passed: outcomes.iter().all(|o| o.passed),
        outcomes,
    }
}
