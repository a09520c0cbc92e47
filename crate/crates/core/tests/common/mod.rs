#![allow(dead_code)]

use std::collections::BTreeMap;

use ncp_core::checks::{
    composition_check, full_interval_checks, regular_times, test_unitary, unitary_invariance_check, CheckOutcome,
};
use ncp_core::dynamics::{BuiltinModel, IntegratorTolerances};
use ncp_core::measure::{ncp_interval, DEFAULT_NEG_THRESHOLD};
use proptest::prelude::*;

pub fn builtin(name: &str, pairs: &[(&str, f64)]) -> BuiltinModel {
    let p: BTreeMap<String, f64> = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    BuiltinModel::from_params(name, &p).unwrap()
}

/// Random built-in models over the documented parameter ranges:
///
/// * `damped_jc`: `R ∈ [0.1, 10]`, `λ ∈ [0.5, 2]`
/// * `detuned_jc`: `γ₀ ∈ [0.1, 5]`, `λ ∈ [0.5, 2]`, `Δ ∈ [0, 12]`
/// * `spin_bath`: `N ∈ 1..=25`, `A ∈ [0.5, 2]`
pub fn any_builtin() -> impl Strategy<Value = BuiltinModel> {
    prop_oneof![
        (0.1f64..10.0, 0.5f64..2.0).prop_map(|(r, l)| builtin("damped_jc", &[("R", r), ("lambda", l)])),
        (0.1f64..5.0, 0.5f64..2.0, 0.0f64..12.0)
            .prop_map(|(g, l, d)| builtin("detuned_jc", &[("gamma0", g), ("lambda", l), ("delta", d)])),
        (1u32..=25, 0.5f64..2.0).prop_map(|(n, a)| builtin("spin_bath", &[("N", n as f64), ("A", a)])),
    ]
}

/// Sample times per invariant case.
pub const INVARIANT_TIMES: usize = 4;

/// Composition, CP of `Λ(t, 0)`, Choi marginal, unitary invariance and
/// `Ncp(t, t) = 0` for one model; the first violation as an error.
pub fn invariant_case(b: &BuiltinModel) -> Result<Vec<CheckOutcome>, String> {
    let tol = IntegratorTolerances::precise();
    let m = b.model::<f64>();
    let ts = regular_times(b, INVARIANT_TIMES);
    let mut outcomes = vec![composition_check(&m, &ts, &tol)];
    outcomes.extend(full_interval_checks(&m, &ts, &tol));
    outcomes.push(unitary_invariance_check(&m, &ts, &test_unitary(), &tol));
    for o in &outcomes {
        if !o.passed {
            return Err(format!(
                "{b:?}: {} = {:e} > {:e} {:?}",
                o.name, o.max_deviation, o.tolerance, o.detail
            ));
        }
    }
    for &t in &ts {
        let v = ncp_interval(&m, t, t, &tol, DEFAULT_NEG_THRESHOLD).map_err(|e| e.to_string())?;
        if v.value != 0.0 {
            return Err(format!("{b:?}: Ncp({t}, {t}) = {}", v.value));
        }
    }
    Ok(outcomes)
}
