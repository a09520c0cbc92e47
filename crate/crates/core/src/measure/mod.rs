//! The non-complete-positivity measure `Ncp`, its scan over the
//! `(t₁, Δt)` plane, the averaged measure `NM`, and a trace-distance
//! cross-check.

mod blp;
mod grid;
mod ncp;
mod nm;
mod region;

pub use blp::{blp_witness, default_blp_pair, trace_distance, BlpSample, BlpTrace};
pub use grid::{linspace, midpoints, ncp_grid, CellFlag, NcpGrid};
pub use ncp::{ncp, ncp_interval, NcpValue, DEFAULT_NEG_THRESHOLD};
pub use nm::{
    nm_estimate, nm_estimate_with_grid, nm_from_grid, nm_random, nm_sweep, ConvergencePoint, NmEstimate, NmOptions,
    RandomNmEstimate, SweepDiagnostics, SweepPoint, SweepResult,
};
pub use region::{representative_region, RegionRationale, RepresentativeRegion, PRESCAN_THRESHOLD};

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::qmat::QmatError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Qmat(#[from] QmatError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no representative region: {0}")]
    NotApplicable(String),
    #[error("no non-CP cells at resolution {resolution} although the model is non-Markovian; refine the grid")]
    RegionTooCoarse { resolution: usize },
}
