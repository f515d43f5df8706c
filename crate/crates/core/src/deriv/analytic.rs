//! Reference paths that bypass the providers.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::functions::MassMatrix;
use crate::autodiff::forward_jacobian;
use crate::dynamics::{crba, ltl_factorize};
use crate::error::{check_len, Error, Result};
use crate::model::RobotModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticMethod {
    /// `M` from CRBA, inverted densely.
    DenseInverse,
    /// `M` from CRBA, solved with the tree `L^T L` factor.
    LtL,
}

/// `d qdd / d u = M^-1 S^T` at `q`.
pub fn analytic_torque_jacobian(
    model: &RobotModel,
    q: &[f64],
    method: AnalyticMethod,
) -> Result<DMatrix<f64>> {
    let m = crba(&model.params::<f64>(), q)?;
    let st = model.selection_matrix().transpose();
    match method {
        AnalyticMethod::DenseInverse => {
            let inv = m
                .to_dmatrix()
                .try_inverse()
                .ok_or_else(|| Error::Numerical("singular joint-space inertia".into()))?;
            Ok(inv * st)
        }
        AnalyticMethod::LtL => ltl_factorize(&m, model)?.solve_matrix(&st),
    }
}

/// `dM/dq` for a fixed-base model: entry `k` is `dM/dq_k`, obtained by
/// differentiating CRBA.
pub fn mass_matrix_derivative(model: &Arc<RobotModel>, q: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    if model.has_floating_base() {
        return Err(Error::Validation(
            "mass-matrix derivative is defined for fixed-base models".into(),
        ));
    }
    let n = model.n_dof();
    check_len("q", n, q.len())?;
    let (_, j) = forward_jacobian(&MassMatrix::new(model.clone()), q, None)?;
    Ok((0..n)
        .map(|k| DMatrix::from_row_slice(n, n, j.column(k).as_slice()))
        .collect())
}
