use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ncp_core::dynamics::{BuiltinModel, IntegratorTolerances, ModelSpec, MODEL_NAMES};
use ncp_core::measure::{linspace, RegionRationale, RepresentativeRegion, DEFAULT_NEG_THRESHOLD};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `start:end:n` — `n ≥ 2` equally spaced points, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RangeRepr", into = "String")]
pub struct RangeSpec {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    Text(String),
    Fields { start: f64, end: f64, n: usize },
}

impl TryFrom<RangeRepr> for RangeSpec {
    type Error = String;

    fn try_from(r: RangeRepr) -> Result<Self, String> {
        match r {
            RangeRepr::Text(s) => s.parse(),
            RangeRepr::Fields { start, end, n } => RangeSpec::new(start, end, n),
        }
    }
}

impl From<RangeSpec> for String {
    fn from(r: RangeSpec) -> String {
        r.to_string()
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.n)
    }
}

impl RangeSpec {
    pub fn new(start: f64, end: f64, n: usize) -> Result<Self, String> {
        if !start.is_finite() || !end.is_finite() || start < 0.0 {
            return Err(format!(
                "range bounds must be finite and non-negative (got {start}:{end})"
            ));
        }
        if end <= start {
            return Err(format!("range end must exceed start (got {start}:{end})"));
        }
        if n < 2 {
            return Err(format!("range needs at least 2 points (got {n})"));
        }
        Ok(Self { start, end, n })
    }

    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.end, self.n)
    }
}

impl FromStr for RangeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("expected start:end:n, got `{s}`"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
        let n = n.trim().parse::<usize>().map_err(|e| format!("`{n}`: {e}"))?;
        RangeSpec::new(num(a)?, num(b)?, n)
    }
}

/// Sweep values: an explicit list or a range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValuesSpec {
    List(Vec<f64>),
    Range(RangeSpec),
}

impl ValuesSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ValuesSpec::List(v) => v.clone(),
            ValuesSpec::Range(r) => r.points(),
        }
    }
}

impl FromStr for ValuesSpec {
    type Err = String;

    /// `a:b:n` or a comma-separated list.
    fn from_str(s: &str) -> Result<Self, String> {
        if s.contains(':') {
            return Ok(ValuesSpec::Range(s.parse()?));
        }
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(ValuesSpec::List)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: String,
    pub values: ValuesSpec,
}

/// Inline model definition or path to a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Inline(ModelSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub t1_start: f64,
    pub t1_end: f64,
    pub dt_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolSpec {
    pub rtol: f64,
    #[serde(default)]
    pub atol: Option<f64>,
}

/// Everything a run needs; loaded from `--config` and overridden by flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<RangeSpec>,
    /// Rows of the NM grid (cells across the `t₁` span).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_refinements: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Uniform-random cross-check samples for `nm` (0: off).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<TolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(ModelRef::File(p)) = &cfg.model {
            match p.to_str() {
                Some(name) if MODEL_NAMES.contains(&name) => {
                    let name = name.to_owned();
                    cfg.set_model(&name)
                }
                // Model files named in a config resolve relative to it.
                _ if p.is_relative() => {
                    let dir = path.parent().unwrap_or(Path::new(""));
                    cfg.model = Some(ModelRef::File(dir.join(p)));
                }
                _ => {}
            }
        }
        Ok(cfg)
    }

    /// The model definition, reading the model file if needed.
    pub fn model_spec(&self) -> Result<ModelSpec, CliError> {
        match &self.model {
            None => Err(CliError::Config("no model given (use --model or a config file)".into())),
            Some(ModelRef::Inline(s)) => Ok(s.clone()),
            Some(ModelRef::File(p)) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read model file {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("model file {}: {e}", p.display())))
            }
        }
    }

    /// Sets the model from `--model`: a built-in family name or a file path.
    pub fn set_model(&mut self, arg: &str) {
        self.model = Some(if MODEL_NAMES.contains(&arg) {
            ModelRef::Inline(ModelSpec::Builtin {
                model: arg.to_string(),
                params: BTreeMap::new(),
            })
        } else {
            ModelRef::File(arg.into())
        });
    }

    /// Merges `k=v` parameters into a built-in model definition, resolving a
    /// model file first if necessary.
    pub fn set_params(&mut self, params: &[(String, f64)]) -> Result<(), CliError> {
        if params.is_empty() {
            return Ok(());
        }
        let mut spec = self.model_spec()?;
        let ModelSpec::Builtin { params: p, .. } = &mut spec else {
            return Err(CliError::Config("--params applies to built-in models only".into()));
        };
        p.extend(params.iter().cloned());
        self.model = Some(ModelRef::Inline(spec));
        Ok(())
    }

    pub fn builtin(&self) -> Result<Option<BuiltinModel>, CliError> {
        Ok(self.model_spec()?.builtin()?)
    }

    /// `--tol r` sets `rtol = r`, `atol = r/1000`.
    pub fn tolerances(&self, default: IntegratorTolerances<f64>) -> Result<IntegratorTolerances<f64>, CliError> {
        let Some(t) = self.tol else {
            return Ok(default);
        };
        let tol = IntegratorTolerances::new(t.rtol, t.atol.unwrap_or(t.rtol * 1e-3));
        tol.validate()?;
        Ok(tol)
    }

    pub fn neg_threshold(&self) -> Result<f64, CliError> {
        let thr = self.neg_threshold.unwrap_or(DEFAULT_NEG_THRESHOLD);
        if !(thr >= 0.0 && thr.is_finite()) {
            return Err(CliError::Config(format!(
                "neg_threshold must be finite and ≥ 0 (got {thr})"
            )));
        }
        Ok(thr)
    }

    pub fn region_override(&self) -> Result<Option<RepresentativeRegion>, CliError> {
        self.region
            .map(|r| {
                RepresentativeRegion::new(r.t1_start, r.t1_end, r.dt_max, RegionRationale::Bounded)
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .transpose()
    }
}

/// `k=v` with a numeric value.
pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}
