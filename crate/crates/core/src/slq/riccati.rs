//! Riccati backward pass over a time-varying LQ approximation.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Discrete dynamics `dx' = A dx + B du` along a trajectory.
#[derive(Clone, Debug, Default)]
pub struct LqApproximation {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
}

/// Quadratic cost model: per-step gradients and Hessians plus the final
/// state term.
#[derive(Clone, Debug, Default)]
pub struct CostApproximation {
    pub q: Vec<DVector<f64>>,
    pub r: Vec<DVector<f64>>,
    pub q_xx: Vec<DMatrix<f64>>,
    pub r_uu: Vec<DMatrix<f64>>,
    pub p_ux: Vec<DMatrix<f64>>,
    pub final_x: DVector<f64>,
    pub final_xx: DMatrix<f64>,
}

/// Feedback law `du = k + K dx` for every step.
#[derive(Clone, Debug)]
pub struct RiccatiGains {
    pub gains: Vec<DMatrix<f64>>,
    pub feedforward: Vec<DVector<f64>>,
    /// Predicted first- and second-order cost changes for a full step.
    pub expected_decrease: (f64, f64),
}

/// Runs the backward pass with `mu` added to the value Hessian inside the
/// control blocks. Fails if a control Hessian is not positive definite.
pub fn riccati_backward_pass(
    lq: &LqApproximation,
    cost: &CostApproximation,
    mu: f64,
) -> Result<RiccatiGains> {
    let n = lq.a.len();
    if lq.b.len() != n || cost.q.len() != n || cost.r.len() != n {
        return Err(Error::RiccatiFailure(
            "horizon lengths of dynamics and cost differ".into(),
        ));
    }
    let nx = cost.final_x.len();
    let mut v_x = cost.final_x.clone();
    let mut v_xx = cost.final_xx.clone();
    let mut gains = vec![DMatrix::zeros(0, 0); n];
    let mut feedforward = vec![DVector::zeros(0); n];
    let (mut d1, mut d2) = (0.0, 0.0);
    for t in (0..n).rev() {
        let (a, b) = (&lq.a[t], &lq.b[t]);
        let at = a.transpose();
        let bt = b.transpose();
        let q_x = &cost.q[t] + &at * &v_x;
        let q_u = &cost.r[t] + &bt * &v_x;
        let q_xx = &cost.q_xx[t] + &at * &v_xx * a;
        let v_reg = &v_xx + DMatrix::identity(nx, nx) * mu;
        let q_uu = &cost.r_uu[t] + &bt * &v_reg * b;
        let q_ux = &cost.p_ux[t] + &bt * &v_reg * a;
        let q_uu_sym = (&q_uu + q_uu.transpose()) * 0.5;
        let chol = Cholesky::new(q_uu_sym).ok_or_else(|| {
            Error::RiccatiFailure(format!("control Hessian not positive definite at step {t}"))
        })?;
        let k = -chol.solve(&q_u);
        let kk = -chol.solve(&q_ux);
        if !(k.iter().all(|v| v.is_finite()) && kk.iter().all(|v| v.is_finite())) {
            return Err(Error::RiccatiFailure(format!(
                "non-finite gain at step {t}"
            )));
        }
        d1 += k.dot(&q_u);
        d2 += 0.5 * k.dot(&(&q_uu * &k));
        let kt = kk.transpose();
        v_x = &q_x + &kt * &q_uu * &k + &kt * &q_u + q_ux.transpose() * &k;
        let v = &q_xx + &kt * &q_uu * &kk + &kt * &q_ux + q_ux.transpose() * &kk;
        v_xx = (&v + v.transpose()) * 0.5;
        gains[t] = kk;
        feedforward[t] = k;
    }
    Ok(RiccatiGains {
        gains,
        feedforward,
        expected_decrease: (d1, d2),
    })
}
