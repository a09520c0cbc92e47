//! Non-Markovianity of open-quantum-system dynamics, quantified by the
//! non-complete-positivity of intermediate maps `Λ(t₂, t₁)`.
//!
//! The numerics are generic over the real scalar ([`Real`]: `f32`, `f64`);
//! the aliases below fix `f64`, which is what every documented tolerance
//! assumes.

// `!(x > 0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod dynamics;
pub mod measure;
pub mod qmat;
pub mod scalar;

pub use scalar::{Cx, Real};

pub type ComplexMatrix = qmat::CMatrix<f64>;
pub type Model = dynamics::TimeLocalModel<f64>;
pub type Propagator = dynamics::PropagatorMatrix<f64>;
pub type Choi = dynamics::ChoiMatrix<f64>;
pub type Tolerances = dynamics::IntegratorTolerances<f64>;
