//! Time-local master equations, their two-time propagators, Choi states,
//! and the built-in models with closed-form references.

mod builtin;
mod custom;
mod integrator;
mod model;
pub mod oracles;
mod propagator;
pub mod superop;

pub use builtin::{
    builtin_model, BuiltinModel, ModelParamsDampedJC, ModelParamsDetunedJC, ModelParamsSpinBath, MODEL_NAMES,
};
pub use custom::{model_from_json, model_from_spec, ChannelSpec, ModelSpec, SampledTable};
pub use integrator::{integrate, IntegrationStats, IntegratorTolerances};
pub use model::{
    BridgeFn, Channel, ModelDescriptor, OperatorFn, RateFn, SingularTimes, TimeLocalModel, DEFAULT_BRIDGE_HALF_WIDTH,
    DEFAULT_SINGULAR_GUARD,
};
pub use propagator::{
    choi_of_interval, choi_via_ancilla, evolve_state, propagate, propagate_many, ChoiDiagnostics, ChoiMatrix,
    PropagatorMatrix,
};
pub use superop::{apply_generator, generator_superoperator};

use thiserror::Error;

use crate::qmat::QmatError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Qmat(#[from] QmatError),
    #[error("t = {t} lies within {guard:e} of the singular time {singular}")]
    SingularTime { t: f64, singular: f64, guard: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("integration tolerance not met at t = {t}: {reason}")]
    ToleranceNotMet { t: f64, reason: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("amplitude vanishes at t = {t}; only the limiting value is defined")]
    SingularPoint { t: f64 },
    #[error("rate has a pole at t = {t}")]
    PoleAt { t: f64 },
    #[error("cannot continue across the singular time {singular}: model has no bridge")]
    SingularCrossing { singular: f64 },
}
