//! Model definition files.
//!
//! Built-in families: `{"model": "damped_jc", "params": {"gamma0": 5.0, "lambda": 1.0}}`.
//!
//! Custom models:
//!
//! ```json
//! {
//!   "model": "custom",
//!   "dim": 2,
//!   "time_unit": "1",
//!   "hamiltonian": {"operator": [[1, 0], [0, -1]], "scale": {"times": [0, 1], "values": [0, 2]}},
//!   "channels": [
//!     {"label": "dephasing", "operator": [[1, 0], [0, -1]], "rate": 0.5},
//!     {"operator": [[0, 1], [0, 0]], "rate": {"times": [0, 1, 2], "values": [1, -0.2, 0.4]}}
//!   ],
//!   "singular_times": []
//! }
//! ```
//!
//! Matrix entries are numbers or `[re, im]` pairs. Time-dependent rates and
//! Hamiltonian prefactors are sampled tables, linearly interpolated and held
//! constant beyond their end points.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BuiltinModel, Channel, DynamicsError, SingularTimes, TimeLocalModel};
use crate::qmat::CMatrix;
use crate::scalar::{cx, Real};

/// `(time, value)` samples with linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledTable {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledTable {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.times.is_empty() || self.times.len() != self.values.len() {
            return Err(DynamicsError::InvalidParams(
                "sampled table needs equally many (≥1) times and values".into(),
            ));
        }
        if self.times.iter().chain(&self.values).any(|x| !x.is_finite()) {
            return Err(DynamicsError::InvalidParams(
                "sampled table has non-finite entries".into(),
            ));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DynamicsError::InvalidParams(
                "sampled times must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarSpec {
    Constant(f64),
    Table(SampledTable),
}

impl ScalarSpec {
    fn validate(&self) -> Result<(), DynamicsError> {
        match self {
            ScalarSpec::Constant(c) if !c.is_finite() => {
                Err(DynamicsError::InvalidParams("constant must be finite".into()))
            }
            ScalarSpec::Constant(_) => Ok(()),
            ScalarSpec::Table(t) => t.validate(),
        }
    }

    fn to_fn<T: Real>(&self) -> Arc<dyn Fn(T) -> T + Send + Sync> {
        match self.clone() {
            ScalarSpec::Constant(c) => Arc::new(move |_| T::lit(c)),
            ScalarSpec::Table(tab) => Arc::new(move |t: T| T::lit(tab.eval(t.to_f64_lossy()))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntrySpec {
    Real(f64),
    Complex([f64; 2]),
}

pub type MatrixSpec = Vec<Vec<EntrySpec>>;

fn matrix<T: Real>(m: &MatrixSpec, dim: usize, what: &str) -> Result<CMatrix<T>, DynamicsError> {
    if m.len() != dim || m.iter().any(|r| r.len() != dim) {
        return Err(DynamicsError::InvalidParams(format!("{what} must be {dim}x{dim}")));
    }
    let data = m
        .iter()
        .flatten()
        .map(|e| match *e {
            EntrySpec::Real(x) => cx(T::lit(x), T::zero()),
            EntrySpec::Complex([a, b]) => cx(T::lit(a), T::lit(b)),
        })
        .collect();
    CMatrix::new(dim, dim, data).map_err(|_| DynamicsError::InvalidParams(format!("{what} has non-finite entries")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub operator: MatrixSpec,
    /// Time-dependent prefactor; 1 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScalarSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub operator: MatrixSpec,
    pub rate: ScalarSpec,
}

/// Contents of a model definition file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Custom {
        model: CustomTag,
        dim: usize,
        #[serde(default)]
        hamiltonian: Option<HamiltonianSpec>,
        #[serde(default)]
        channels: Vec<ChannelSpec>,
        #[serde(default)]
        singular_times: Vec<f64>,
        #[serde(default = "default_unit")]
        time_unit: String,
    },
    Builtin {
        model: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomTag {
    Custom,
}

fn default_unit() -> String {
    "1".into()
}

impl ModelSpec {
    /// The built-in family this spec names, if any.
    pub fn builtin(&self) -> Result<Option<BuiltinModel>, DynamicsError> {
        match self {
            ModelSpec::Builtin { model, params } => Ok(Some(BuiltinModel::from_params(model, params)?)),
            ModelSpec::Custom { .. } => Ok(None),
        }
    }
}

/// Builds the model described by `spec`.
pub fn model_from_spec<T: Real>(spec: &ModelSpec) -> Result<TimeLocalModel<T>, DynamicsError> {
    let ModelSpec::Custom {
        dim,
        hamiltonian,
        channels,
        singular_times,
        time_unit,
        ..
    } = spec
    else {
        return Ok(spec.builtin()?.expect("builtin spec").model());
    };
    let dim = *dim;
    let mut m = TimeLocalModel::new("custom", dim, time_unit.clone())?;
    if let Some(h) = hamiltonian {
        let op = matrix::<T>(&h.operator, dim, "hamiltonian")?;
        if op.hermiticity_deviation() > T::lit(1e-12) {
            return Err(DynamicsError::InvalidParams("hamiltonian must be Hermitian".into()));
        }
        let scale = h.scale.clone().unwrap_or(ScalarSpec::Constant(1.0));
        scale.validate()?;
        let f = scale.to_fn::<T>();
        m = m.with_hamiltonian(Arc::new(move |t| op.scale_real(f(t))));
    }
    for (i, c) in channels.iter().enumerate() {
        c.rate.validate()?;
        let op = matrix::<T>(&c.operator, dim, "jump operator")?;
        let label = c.label.clone().unwrap_or_else(|| format!("channel{i}"));
        m = m.with_channel(Channel::constant(label, op, c.rate.to_fn()));
    }
    if singular_times.iter().any(|t| !t.is_finite()) {
        return Err(DynamicsError::InvalidParams("singular times must be finite".into()));
    }
    if !singular_times.is_empty() {
        m = m.with_singular_times(SingularTimes::List(singular_times.iter().map(|&t| T::lit(t)).collect()));
    }
    Ok(m)
}

/// Parses a model definition file and builds the model.
pub fn model_from_json<T: Real>(json: &str) -> Result<TimeLocalModel<T>, DynamicsError> {
    let spec: ModelSpec =
        serde_json::from_str(json).map_err(|e| DynamicsError::InvalidParams(format!("model file: {e}")))?;
    model_from_spec(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::superop::dephasing_superop;
    use crate::dynamics::{apply_generator, propagate};

    #[test]
    fn builtin_file_format() {
        let m = model_from_json::<f64>(r#"{"model": "damped_jc", "params": {"gamma0": 5.0, "lambda": 1.0}}"#).unwrap();
        assert_eq!(m.descriptor().name, "damped_jc");
        assert!(!m.singular_times().is_empty());
        assert!(model_from_json::<f64>(r#"{"model": "damped_jc", "params": {"gamma0": -5.0}}"#).is_err());
    }

    #[test]
    fn table_interpolation() {
        let t = SampledTable {
            times: vec![0.0, 1.0, 3.0],
            values: vec![1.0, -1.0, 3.0],
        };
        assert_eq!(t.eval(-1.0), 1.0);
        assert_eq!(t.eval(0.5), 0.0);
        assert_eq!(t.eval(2.0), 1.0);
        assert_eq!(t.eval(9.0), 3.0);
    }

    #[test]
    fn custom_dephasing_matches_constant_rate() {
        let json = r#"{
            "model": "custom", "dim": 2,
            "channels": [{"operator": [[1, 0], [0, -1]], "rate": {"times": [0, 10], "values": [0.5, 0.5]}}]
        }"#;
        let m = model_from_json::<f64>(json).unwrap();
        let p = propagate(&m, 0.0, 1.0, &Default::default()).unwrap();
        assert!(p.matrix.max_abs_diff(&dephasing_superop((-1.0f64).exp())) < 1e-9);
    }

    #[test]
    fn custom_complex_entries_and_hamiltonian() {
        let json = r#"{
            "model": "custom", "dim": 2, "time_unit": "ns",
            "hamiltonian": {"operator": [[0, [0, -1]], [[0, 1], 0]], "scale": 2.0},
            "singular_times": [3.0]
        }"#;
        let m = model_from_json::<f64>(json).unwrap();
        assert_eq!(m.time_unit(), "ns");
        assert!(apply_generator(&m, 3.0, &CMatrix::identity(2)).is_err());
        let rho = CMatrix::unit(2, 0, 0);
        assert!(apply_generator(&m, 0.0, &rho).unwrap().max_abs() > 0.0);
    }

    #[test]
    fn custom_rejects_bad_input() {
        for json in [
            r#"{"model": "custom", "dim": 2, "channels": [{"operator": [[1, 0]], "rate": 1}]}"#,
            r#"{"model": "custom", "dim": 2, "hamiltonian": {"operator": [[0, 1], [0, 0]]}}"#,
            r#"{"model": "custom", "dim": 1}"#,
            r#"{"model": "custom", "dim": 2, "channels": [{"operator": [[1, 0], [0, 1]], "rate": {"times": [1, 0], "values": [0, 0]}}]}"#,
            r#"not json"#,
        ] {
            assert!(model_from_json::<f64>(json).is_err(), "{json}");
        }
    }
}
