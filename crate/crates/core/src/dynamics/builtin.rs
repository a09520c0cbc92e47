//! The three reference models: damped and detuned Jaynes–Cummings
//! (amplitude damping with a Lorentzian bath) and a qubit dephased by `N`
//! bath spins.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::oracles::{
    self, oracle_c_damped, oracle_c_detuned, oracle_f_spinbath, oracle_gamma_damped, oracle_gamma_spinbath,
    oracle_rates_detuned, OracleNcp,
};
use super::superop::{amplitude_damping_superop, dephasing_superop};
use super::{BridgeFn, Channel, DynamicsError, SingularTimes, TimeLocalModel, DEFAULT_BRIDGE_HALF_WIDTH};
use crate::qmat::paulis;
use crate::scalar::{re, Real};

/// Accepted names for [`builtin_model`].
pub const MODEL_NAMES: [&str; 3] = ["damped_jc", "detuned_jc", "spin_bath"];

fn positive(name: &str, v: f64) -> Result<f64, DynamicsError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(DynamicsError::InvalidParams(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParamsDampedJC {
    pub gamma0: f64,
    pub lambda: f64,
}

impl ModelParamsDampedJC {
    pub fn new(gamma0: f64, lambda: f64) -> Result<Self, DynamicsError> {
        Ok(Self {
            gamma0: positive("gamma0", gamma0)?,
            lambda: positive("lambda", lambda)?,
        })
    }

    /// From the ratio `R = γ₀/λ`.
    pub fn from_ratio(r: f64, lambda: f64) -> Result<Self, DynamicsError> {
        Self::new(r * lambda, lambda)
    }

    /// `R = γ₀/λ`; the dynamics is non-Markovian for `R > ½`.
    pub fn ratio(&self) -> f64 {
        self.gamma0 / self.lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParamsDetunedJC {
    pub gamma0: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl ModelParamsDetunedJC {
    pub fn new(gamma0: f64, lambda: f64, delta: f64) -> Result<Self, DynamicsError> {
        if !delta.is_finite() {
            return Err(DynamicsError::InvalidParams("delta must be finite".into()));
        }
        Ok(Self {
            gamma0: positive("gamma0", gamma0)?,
            lambda: positive("lambda", lambda)?,
            delta,
        })
    }

    pub fn resonant(&self) -> ModelParamsDampedJC {
        ModelParamsDampedJC {
            gamma0: self.gamma0,
            lambda: self.lambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParamsSpinBath {
    pub n_spins: u32,
    /// Total coupling `A`; each spin couples with `A/√N`.
    pub coupling: f64,
}

impl ModelParamsSpinBath {
    pub fn new(n_spins: u32, coupling: f64) -> Result<Self, DynamicsError> {
        if n_spins == 0 {
            return Err(DynamicsError::InvalidParams("n_spins must be at least 1".into()));
        }
        Ok(Self {
            n_spins,
            coupling: positive("coupling", coupling)?,
        })
    }
}

/// A built-in model family with concrete parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum BuiltinModel {
    DampedJc(ModelParamsDampedJC),
    DetunedJc(ModelParamsDetunedJC),
    SpinBath(ModelParamsSpinBath),
}

fn take(map: &mut BTreeMap<String, f64>, keys: &[&str]) -> Result<Option<f64>, DynamicsError> {
    let found: Vec<f64> = keys.iter().filter_map(|k| map.remove(*k)).collect();
    match found.len() {
        0 => Ok(None),
        1 => Ok(Some(found[0])),
        _ => Err(DynamicsError::InvalidParams(format!(
            "parameters {} are aliases; give only one",
            keys.join("/")
        ))),
    }
}

fn gamma0_from(map: &mut BTreeMap<String, f64>, lambda: f64) -> Result<f64, DynamicsError> {
    let g = take(map, &["gamma0"])?;
    let r = take(map, &["R", "ratio"])?;
    match (g, r) {
        (Some(g), None) => Ok(g),
        (None, Some(r)) => Ok(r * lambda),
        (None, None) => Err(DynamicsError::InvalidParams("missing gamma0 (or R)".into())),
        (Some(_), Some(_)) => Err(DynamicsError::InvalidParams("give gamma0 or R, not both".into())),
    }
}

impl BuiltinModel {
    /// Builds from a family name and a flat parameter map.
    ///
    /// Keys: `damped_jc` — `gamma0` or `R`, `lambda` (default 1);
    /// `detuned_jc` — as damped plus `delta` (default 0);
    /// `spin_bath` — `n_spins`/`N`, `coupling`/`A` (default 1).
    pub fn from_params(name: &str, params: &BTreeMap<String, f64>) -> Result<Self, DynamicsError> {
        let mut map = params.clone();
        let model = match name {
            "damped_jc" => {
                let lambda = take(&mut map, &["lambda"])?.unwrap_or(1.0);
                let g = gamma0_from(&mut map, lambda)?;
                BuiltinModel::DampedJc(ModelParamsDampedJC::new(g, lambda)?)
            }
            "detuned_jc" => {
                let lambda = take(&mut map, &["lambda"])?.unwrap_or(1.0);
                let g = gamma0_from(&mut map, lambda)?;
                let delta = take(&mut map, &["delta", "Delta"])?.unwrap_or(0.0);
                BuiltinModel::DetunedJc(ModelParamsDetunedJC::new(g, lambda, delta)?)
            }
            "spin_bath" => {
                let n = take(&mut map, &["n_spins", "N"])?
                    .ok_or_else(|| DynamicsError::InvalidParams("missing n_spins".into()))?;
                if n.fract() != 0.0 || n < 1.0 || n > u32::MAX as f64 {
                    return Err(DynamicsError::InvalidParams(format!(
                        "n_spins must be a positive integer, got {n}"
                    )));
                }
                let a = take(&mut map, &["coupling", "A"])?.unwrap_or(1.0);
                BuiltinModel::SpinBath(ModelParamsSpinBath::new(n as u32, a)?)
            }
            other => {
                return Err(DynamicsError::InvalidParams(format!(
                    "unknown model '{other}' (expected one of {})",
                    MODEL_NAMES.join(", ")
                )))
            }
        };
        if let Some(k) = map.keys().next() {
            return Err(DynamicsError::InvalidParams(format!(
                "unknown parameter '{k}' for {name}"
            )));
        }
        Ok(model)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinModel::DampedJc(_) => "damped_jc",
            BuiltinModel::DetunedJc(_) => "detuned_jc",
            BuiltinModel::SpinBath(_) => "spin_bath",
        }
    }

    /// Canonical parameter map (no aliases).
    pub fn params(&self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match *self {
            BuiltinModel::DampedJc(p) => vec![("gamma0", p.gamma0), ("lambda", p.lambda)],
            BuiltinModel::DetunedJc(p) => {
                vec![("gamma0", p.gamma0), ("lambda", p.lambda), ("delta", p.delta)]
            }
            BuiltinModel::SpinBath(p) => vec![("n_spins", p.n_spins as f64), ("coupling", p.coupling)],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Same family with one parameter replaced; `R` replaces `gamma0`.
    pub fn with_param(&self, key: &str, value: f64) -> Result<Self, DynamicsError> {
        let mut map = self.params();
        match key {
            "R" | "ratio" => {
                map.remove("gamma0");
            }
            "N" => {
                map.remove("n_spins");
            }
            "A" => {
                map.remove("coupling");
            }
            "Delta" => {
                map.remove("delta");
            }
            _ => {}
        }
        map.insert(key.to_string(), value);
        Self::from_params(self.name(), &map)
    }

    pub fn time_unit(&self) -> &'static str {
        match self {
            BuiltinModel::SpinBath(_) => "1/A",
            _ => "1/lambda",
        }
    }

    /// Period of the Ncp pattern in `t₁`, when the model is periodic.
    pub fn period(&self) -> Option<f64> {
        match self {
            BuiltinModel::DampedJc(p) => oracles::period_damped(p),
            BuiltinModel::DetunedJc(p) if p.delta == 0.0 => oracles::period_damped(&p.resonant()),
            BuiltinModel::DetunedJc(_) => None,
            BuiltinModel::SpinBath(p) => Some(oracles::period_spinbath(p)),
        }
    }

    /// Closed-form Ncp of `Λ(t₂, t₁)`.
    pub fn oracle_ncp<T: Real>(&self, t1: T, t2: T) -> Result<OracleNcp<T>, DynamicsError> {
        match self {
            BuiltinModel::DampedJc(p) => oracles::oracle_ncp_damped(p, t1, t2),
            BuiltinModel::DetunedJc(p) => oracles::oracle_ncp_detuned(p, t1, t2),
            BuiltinModel::SpinBath(p) => oracles::oracle_ncp_spinbath(p, t1, t2),
        }
    }

    pub fn model<T: Real>(&self) -> TimeLocalModel<T> {
        match *self {
            BuiltinModel::DampedJc(p) => damped_model(p),
            BuiltinModel::DetunedJc(p) => detuned_model(p),
            BuiltinModel::SpinBath(p) => spin_bath_model(p),
        }
    }
}

fn with_params<T: Real>(m: TimeLocalModel<T>, b: &BuiltinModel) -> TimeLocalModel<T> {
    let m = b.params().into_iter().fold(m, |m, (k, v)| m.with_param(&k, v));
    match b {
        BuiltinModel::DampedJc(p) => m.with_param("R", p.ratio()),
        BuiltinModel::DetunedJc(p) => m.with_param("R", p.resonant().ratio()),
        BuiltinModel::SpinBath(_) => m,
    }
}

fn damped_model<T: Real>(p: ModelParamsDampedJC) -> TimeLocalModel<T> {
    let b = BuiltinModel::DampedJc(p);
    let singular = oracles::singular_times_damped::<T>(&p);
    let diverges = !singular.is_empty();
    let rate = Arc::new(move |t: T| oracle_gamma_damped(&p, t).unwrap_or_else(|_| T::nan()));
    let bridge: BridgeFn<T> =
        Arc::new(move |ta: T, tb: T| amplitude_damping_superop(oracle_c_damped(&p, tb) / oracle_c_damped(&p, ta)));
    let m = TimeLocalModel::new(b.name(), 2, b.time_unit())
        .expect("qubit")
        .with_channel(Channel::constant("sigma_minus", paulis::sigma_minus(), rate))
        .with_singular_times(singular)
        .with_bridge(bridge)
        .with_divergent_limit(diverges);
    with_params(m, &b)
}

fn detuned_model<T: Real>(p: ModelParamsDetunedJC) -> TimeLocalModel<T> {
    let b = BuiltinModel::DetunedJc(p);
    // A complex amplitude generically has no real zeros; on resonance it is
    // the damped model's real amplitude.
    let singular = if p.delta == 0.0 {
        oracles::singular_times_damped::<T>(&p.resonant())
    } else {
        SingularTimes::None
    };
    let diverges = !singular.is_empty();
    let rate = Arc::new(move |t: T| oracle_rates_detuned(&p, t).map_or_else(|_| T::nan(), |r| r.0));
    // H = (s/2) σ₊σ₋ makes the coherence ρ₁₀ follow c(t) exactly.
    let excited = paulis::excited_projector::<T>();
    let hamiltonian = Arc::new(move |t: T| {
        let s = oracle_rates_detuned(&p, t).map_or_else(|_| T::nan(), |r| r.1);
        excited.scale(re(s * T::lit(0.5)))
    });
    let bridge: BridgeFn<T> =
        Arc::new(move |ta: T, tb: T| amplitude_damping_superop(oracle_c_detuned(&p, tb) / oracle_c_detuned(&p, ta)));
    let m = TimeLocalModel::new(b.name(), 2, b.time_unit())
        .expect("qubit")
        .with_hamiltonian(hamiltonian)
        .with_channel(Channel::constant("sigma_minus", paulis::sigma_minus(), rate))
        .with_singular_times(singular)
        .with_bridge(bridge)
        .with_divergent_limit(diverges);
    with_params(m, &b)
}

/// Half-width around each zero of `f = cos^N` inside which `|f| < 1e-3`.
/// The zeros are of order `N`; integrating through that stretch would
/// amplify absolute errors of the coherences by `1/|f|`, so it is bridged.
fn spin_bridge_width(p: &ModelParamsSpinBath) -> f64 {
    let n = p.n_spins as f64;
    let w = 10f64.powf(-3.0 / n).asin() * n.sqrt() / (2.0 * p.coupling);
    w.max(DEFAULT_BRIDGE_HALF_WIDTH)
}

fn spin_bath_model<T: Real>(p: ModelParamsSpinBath) -> TimeLocalModel<T> {
    let b = BuiltinModel::SpinBath(p);
    let rate = Arc::new(move |t: T| oracle_gamma_spinbath(&p, t).unwrap_or_else(|_| T::nan()));
    let bridge: BridgeFn<T> =
        Arc::new(move |ta: T, tb: T| dephasing_superop(oracle_f_spinbath(&p, tb) / oracle_f_spinbath(&p, ta)));
    let m = TimeLocalModel::new(b.name(), 2, b.time_unit())
        .expect("qubit")
        .with_channel(Channel::constant("sigma_z", paulis::sigma_z(), rate))
        .with_singular_times(oracles::singular_times_spinbath(&p))
        .with_bridge(bridge)
        .with_bridge_width(T::lit(spin_bridge_width(&p)))
        .expect("positive width")
        .with_divergent_limit(true);
    with_params(m, &b)
}

/// Builds `damped_jc`, `detuned_jc` or `spin_bath` from a parameter map.
pub fn builtin_model<T: Real>(name: &str, params: &BTreeMap<String, f64>) -> Result<TimeLocalModel<T>, DynamicsError> {
    Ok(BuiltinModel::from_params(name, params)?.model())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::superop::generator_superoperator;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn spin_bath_singular_times() {
        let m = builtin_model::<f64>("spin_bath", &params(&[("n_spins", 1.0), ("coupling", 1.0)])).unwrap();
        let pi = std::f64::consts::PI;
        let s = m.singular_times().in_range(0.0, 3.0);
        assert_eq!(s.len(), 2);
        assert!((s[0] - pi / 4.0).abs() < 1e-14 && (s[1] - 3.0 * pi / 4.0).abs() < 1e-14);
    }

    #[test]
    fn markovian_damped_has_no_singular_times() {
        let m = builtin_model::<f64>("damped_jc", &params(&[("R", 0.3)])).unwrap();
        assert!(m.singular_times().is_empty());
        assert!(!m.limit_diverges());
    }

    #[test]
    fn detuned_on_resonance_matches_damped_generator() {
        for r in [0.3, 5.0] {
            let a = builtin_model::<f64>("damped_jc", &params(&[("R", r)])).unwrap();
            let b = builtin_model::<f64>("detuned_jc", &params(&[("R", r), ("delta", 0.0)])).unwrap();
            for i in 1..40 {
                let t = 0.0917 * i as f64;
                let (Ok(la), Ok(lb)) = (generator_superoperator(&a, t), generator_superoperator(&b, t)) else {
                    continue;
                };
                assert!(la.max_abs_diff(&lb) <= 1e-8 * la.max_abs().max(1.0), "R={r} t={t}");
            }
        }
    }

    #[test]
    fn invalid_params_rejected() {
        for (name, p) in [
            ("damped_jc", params(&[("gamma0", -1.0)])),
            ("damped_jc", params(&[("gamma0", 1.0), ("R", 1.0)])),
            ("damped_jc", params(&[("gamma0", 1.0), ("bogus", 1.0)])),
            ("spin_bath", params(&[("n_spins", 1.5)])),
            ("spin_bath", params(&[("n_spins", 0.0)])),
            ("detuned_jc", params(&[("gamma0", 0.3), ("delta", f64::NAN)])),
            ("nope", params(&[])),
        ] {
            assert!(
                matches!(builtin_model::<f64>(name, &p), Err(DynamicsError::InvalidParams(_))),
                "{name} {p:?}"
            );
        }
    }

    #[test]
    fn with_param_replaces_aliases() {
        let b = BuiltinModel::from_params("damped_jc", &params(&[("gamma0", 5.0)])).unwrap();
        let b2 = b.with_param("R", 2.0).unwrap();
        assert_eq!(b2, BuiltinModel::DampedJc(ModelParamsDampedJC::new(2.0, 1.0).unwrap()));
        let s = BuiltinModel::from_params("spin_bath", &params(&[("N", 3.0)])).unwrap();
        assert_eq!(s.with_param("N", 9.0).unwrap().params()["n_spins"], 9.0);
    }

    #[test]
    fn descriptor_records_params() {
        let m = builtin_model::<f64>("damped_jc", &params(&[("gamma0", 5.0), ("lambda", 1.0)])).unwrap();
        let d = m.descriptor();
        assert_eq!(d.name, "damped_jc");
        assert_eq!(d.params["R"], 5.0);
        assert_eq!(d.time_unit, "1/lambda");
    }

    #[test]
    fn periods() {
        let pi = std::f64::consts::PI;
        let b = BuiltinModel::from_params("damped_jc", &params(&[("R", 5.0)])).unwrap();
        assert!((b.period().unwrap() - 2.0 * pi / 3.0).abs() < 1e-14);
        let s = BuiltinModel::from_params("spin_bath", &params(&[("N", 4.0)])).unwrap();
        assert!((s.period().unwrap() - pi).abs() < 1e-14);
        let m = BuiltinModel::from_params("damped_jc", &params(&[("R", 0.3)])).unwrap();
        assert!(m.period().is_none());
    }
}
