//! Time-local master equations with sign-unrestricted rates.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::qmat::CMatrix;
use crate::scalar::Real;

/// `t ↦ real`.
pub type RateFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
/// `t ↦ d×d operator`.
pub type OperatorFn<T> = Arc<dyn Fn(T) -> CMatrix<T> + Send + Sync>;
/// `(t_a, t_b) ↦` exact `d²×d²` propagator from `t_a` to `t_b`.
///
/// Models whose rates diverge at isolated points supply this so intervals
/// can be continued across a singular window; the time-local equation alone
/// does not determine the solution through a pole of its rates.
pub type BridgeFn<T> = Arc<dyn Fn(T, T) -> CMatrix<T> + Send + Sync>;

/// Default half-width of the exclusion window around each singular time.
pub const DEFAULT_SINGULAR_GUARD: f64 = 1e-4;

/// Default half-width of the window traversed with the bridge instead of
/// the integrator. Near a pole the rate is only known to relative accuracy
/// `~ε·t/|t − t_s|`, so integrating all the way to the guard loses digits.
pub const DEFAULT_BRIDGE_HALF_WIDTH: f64 = 1e-2;

/// One dissipative channel `γ(t) (V ρ V† − ½{V†V, ρ})`.
#[derive(Clone)]
pub struct Channel<T: Real> {
    pub label: String,
    pub operator: OperatorFn<T>,
    pub rate: RateFn<T>,
    /// Liouville matrix of the rate-free dissipator, cached for constant
    /// operators.
    dissipator: Option<Arc<CMatrix<T>>>,
}

impl<T: Real> Channel<T> {
    /// Channel with a time-dependent jump operator.
    pub fn new(label: impl Into<String>, operator: OperatorFn<T>, rate: RateFn<T>) -> Self {
        Self {
            label: label.into(),
            operator,
            rate,
            dissipator: None,
        }
    }

    /// Channel with a time-independent jump operator.
    pub fn constant(label: impl Into<String>, operator: CMatrix<T>, rate: RateFn<T>) -> Self {
        let dissipator = Some(Arc::new(super::superop::dissipator_superop(&operator)));
        Self {
            label: label.into(),
            operator: Arc::new(move |_| operator.clone()),
            rate,
            dissipator,
        }
    }

    pub(crate) fn cached_dissipator(&self) -> Option<&CMatrix<T>> {
        self.dissipator.as_deref()
    }
}

/// Known times where some rate diverges.
#[derive(Debug, Clone, PartialEq)]
pub enum SingularTimes<T> {
    None,
    /// Explicit list, any order.
    List(Vec<T>),
    /// `first + n·period`, `n = 0, 1, …`.
    Periodic {
        first: T,
        period: T,
    },
}

impl<T: Real> SingularTimes<T> {
    pub fn is_empty(&self) -> bool {
        match self {
            SingularTimes::None => true,
            SingularTimes::List(v) => v.is_empty(),
            SingularTimes::Periodic { .. } => false,
        }
    }

    /// Singular times in the closed interval `[a, b]`, ascending.
    pub fn in_range(&self, a: T, b: T) -> Vec<T> {
        match self {
            SingularTimes::None => Vec::new(),
            SingularTimes::List(v) => {
                let mut out: Vec<T> = v.iter().copied().filter(|&t| t >= a && t <= b).collect();
                out.sort_by(|x, y| x.partial_cmp(y).unwrap());
                out
            }
            &SingularTimes::Periodic { first, period } => {
                if b < first {
                    return Vec::new();
                }
                let n0 = ((a - first) / period).ceil().max(T::zero());
                let mut out = Vec::new();
                let mut n = n0;
                loop {
                    let t = first + n * period;
                    if t > b {
                        break;
                    }
                    if t >= a {
                        out.push(t);
                    }
                    n += T::one();
                }
                out
            }
        }
    }

    /// Smallest gap between consecutive singular times.
    pub fn min_spacing(&self) -> Option<T> {
        match self {
            SingularTimes::None => None,
            SingularTimes::List(v) => {
                let mut v = v.clone();
                v.sort_by(|x, y| x.partial_cmp(y).unwrap());
                v.windows(2).map(|w| w[1] - w[0]).reduce(T::min)
            }
            &SingularTimes::Periodic { period, .. } => Some(period),
        }
    }

    /// Singular time whose guard window `[t_s − guard, t_s + guard]` contains `t`.
    pub fn guarding(&self, t: T, guard: T) -> Option<T> {
        self.in_range(t - guard, t + guard).into_iter().next()
    }
}

/// Identifies a model for reports: name plus numeric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub time_unit: String,
}

impl fmt::Display for ModelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, ")")
    }
}

/// `dρ/dt = −i[H(t), ρ] + Σ_α γ_α(t)(V_α ρ V_α† − ½{V_α†V_α, ρ})`.
///
/// Immutable once built; every evaluator is a pure function of `t`, so a
/// model can be shared freely across threads.
#[derive(Clone)]
pub struct TimeLocalModel<T: Real> {
    dim: usize,
    hamiltonian: Option<OperatorFn<T>>,
    channels: Vec<Channel<T>>,
    singular_times: SingularTimes<T>,
    guard: T,
    bridge: Option<BridgeFn<T>>,
    bridge_width: T,
    limit_diverges: bool,
    descriptor: ModelDescriptor,
}

impl<T: Real> fmt::Debug for TimeLocalModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeLocalModel")
            .field("descriptor", &self.descriptor)
            .field("dim", &self.dim)
            .field("channels", &self.channels.len())
            .field("singular_times", &self.singular_times)
            .field("guard", &self.guard)
            .field("bridge", &self.bridge.is_some())
            .field("bridge_width", &self.bridge_width)
            .finish()
    }
}

impl<T: Real> TimeLocalModel<T> {
    pub fn new(name: impl Into<String>, dim: usize, time_unit: impl Into<String>) -> Result<Self, DynamicsError> {
        if dim < 2 {
            return Err(DynamicsError::InvalidParams(format!(
                "Hilbert dimension must be at least 2, got {dim}"
            )));
        }
        Ok(Self {
            dim,
            hamiltonian: None,
            channels: Vec::new(),
            singular_times: SingularTimes::None,
            guard: T::lit(DEFAULT_SINGULAR_GUARD),
            bridge: None,
            bridge_width: T::lit(DEFAULT_BRIDGE_HALF_WIDTH),
            limit_diverges: false,
            descriptor: ModelDescriptor {
                name: name.into(),
                params: BTreeMap::new(),
                time_unit: time_unit.into(),
            },
        })
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.descriptor.params.insert(key.to_string(), value);
        self
    }

    pub fn with_hamiltonian(mut self, h: OperatorFn<T>) -> Self {
        self.hamiltonian = Some(h);
        self
    }

    pub fn with_channel(mut self, channel: Channel<T>) -> Self {
        self.channels.push(channel);
        self
    }

    pub fn with_singular_times(mut self, s: SingularTimes<T>) -> Self {
        self.singular_times = s;
        self
    }

    pub fn with_guard(mut self, guard: T) -> Result<Self, DynamicsError> {
        if !(guard > T::zero()) {
            return Err(DynamicsError::InvalidParams("guard must be positive".into()));
        }
        self.guard = guard;
        Ok(self)
    }

    pub fn with_bridge(mut self, bridge: BridgeFn<T>) -> Self {
        self.bridge = Some(bridge);
        self
    }

    /// Half-width of the window around each singular time crossed with the
    /// bridge; never narrower than the guard.
    pub fn with_bridge_width(mut self, width: T) -> Result<Self, DynamicsError> {
        if !(width > T::zero()) {
            return Err(DynamicsError::InvalidParams("bridge width must be positive".into()));
        }
        self.bridge_width = width;
        Ok(self)
    }

    /// Declares that `Ncp(t₁, t₂) → π/2` as `t₁` approaches a singular time.
    pub fn with_divergent_limit(mut self, diverges: bool) -> Self {
        self.limit_diverges = diverges;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channels(&self) -> &[Channel<T>] {
        &self.channels
    }

    pub fn hamiltonian(&self) -> Option<&OperatorFn<T>> {
        self.hamiltonian.as_ref()
    }

    pub fn singular_times(&self) -> &SingularTimes<T> {
        &self.singular_times
    }

    pub fn guard(&self) -> T {
        self.guard
    }

    pub fn bridge(&self) -> Option<&BridgeFn<T>> {
        self.bridge.as_ref()
    }

    /// Effective bridge half-width: at least the guard, below half the
    /// spacing between singular times.
    pub fn bridge_width(&self) -> T {
        let w = self.bridge_width.max(self.guard);
        match self.singular_times.min_spacing() {
            Some(s) => w.min(s * T::lit(0.45)).max(self.guard),
            None => w,
        }
    }

    pub fn limit_diverges(&self) -> bool {
        self.limit_diverges
    }

    pub fn descriptor(&self) -> &ModelDescriptor {
        &self.descriptor
    }

    pub fn time_unit(&self) -> &str {
        &self.descriptor.time_unit
    }

    /// Fails with `SingularTime` when `t` lies inside a guard window.
    pub fn check_regular(&self, t: T) -> Result<(), DynamicsError> {
        match self.singular_times.guarding(t, self.guard) {
            Some(ts) => Err(DynamicsError::SingularTime {
                t: t.to_f64_lossy(),
                singular: ts.to_f64_lossy(),
                guard: self.guard.to_f64_lossy(),
            }),
            None => Ok(()),
        }
    }

    /// The same dynamics on `system ⊗ ancilla`: every operator `O` becomes
    /// `O ⊗ I_d`; the ancilla evolves trivially.
    pub fn extend_with_ancilla(&self) -> TimeLocalModel<T> {
        let d = self.dim;
        let id = CMatrix::<T>::identity(d);
        let lift = move |op: OperatorFn<T>, id: CMatrix<T>| -> OperatorFn<T> { Arc::new(move |t| op(t).kron(&id)) };
        let channels = self
            .channels
            .iter()
            .map(|c| {
                let label = format!("{}⊗I", c.label);
                if c.dissipator.is_some() {
                    Channel::constant(label, (c.operator)(T::zero()).kron(&id), c.rate.clone())
                } else {
                    Channel::new(label, lift(c.operator.clone(), id.clone()), c.rate.clone())
                }
            })
            .collect();
        let bridge = self
            .bridge
            .clone()
            .map(|b| -> BridgeFn<T> { Arc::new(move |ta, tb| super::superop::tensor_identity(&b(ta, tb), d)) });
        let mut descriptor = self.descriptor.clone();
        descriptor.name = format!("{}+ancilla", descriptor.name);
        TimeLocalModel {
            dim: d * d,
            hamiltonian: self.hamiltonian.clone().map(|h| lift(h, id.clone())),
            channels,
            singular_times: self.singular_times.clone(),
            guard: self.guard,
            bridge,
            bridge_width: self.bridge_width,
            limit_diverges: self.limit_diverges,
            descriptor,
        }
    }
}
