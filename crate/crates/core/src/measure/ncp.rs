use serde::Serialize;

use super::{CellFlag, MeasureError};
use crate::dynamics::{choi_of_interval, ChoiMatrix, DynamicsError, IntegratorTolerances, TimeLocalModel};
use crate::qmat::{hermitian_eigenvalues, QmatError, DEFAULT_HERMITICITY_TOL};
use crate::scalar::Real;

/// Eigenvalues above `−threshold` count as zero.
pub const DEFAULT_NEG_THRESHOLD: f64 = 1e-10;

/// `arctan(−Σ λ_k)` over the Choi eigenvalues `λ_k < −neg_threshold`; 0 for
/// a completely positive map.
pub fn ncp<T: Real>(choi: &ChoiMatrix<T>, neg_threshold: T) -> Result<T, QmatError> {
    let ev = hermitian_eigenvalues(&choi.matrix, T::lit(DEFAULT_HERMITICITY_TOL))?;
    let neg: T = ev.into_iter().filter(|&l| l < -neg_threshold).sum();
    Ok((-neg).atan())
}

/// Ncp of one interval together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NcpValue<T> {
    pub value: T,
    pub flag: CellFlag,
}

/// `Ncp(Λ(t2, t1))`.
///
/// When `t1` sits at a singular time of a model whose Ncp diverges there,
/// the limit value `π/2` is returned with [`CellFlag::SingularLimit`].
pub fn ncp_interval<T: Real>(
    model: &TimeLocalModel<T>,
    t1: T,
    t2: T,
    tol: &IntegratorTolerances<T>,
    neg_threshold: T,
) -> Result<NcpValue<T>, MeasureError> {
    if t2 < t1 {
        return Err(DynamicsError::InvalidParams("t2 precedes t1".into()).into());
    }
    if t2 == t1 {
        return Ok(NcpValue {
            value: T::zero(),
            flag: CellFlag::Ok,
        });
    }
    if let Err(e) = model.check_regular(t1) {
        model.check_regular(t2)?;
        if model.limit_diverges() {
            return Ok(NcpValue {
                value: T::FRAC_PI_2(),
                flag: CellFlag::SingularLimit,
            });
        }
        return Err(e.into());
    }
    let choi = choi_of_interval(model, t1, t2, tol)?;
    Ok(NcpValue {
        value: ncp(&choi, neg_threshold)?,
        flag: CellFlag::Ok,
    })
}
