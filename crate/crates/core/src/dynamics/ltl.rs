//! Tree-structured `M = L^T L` factorization.
//!
//! Rows are eliminated from the leaves towards the root, so the fill-in of
//! `L` stays inside the ancestor pattern of the DoF tree and no pivoting is
//! needed.

use nalgebra::DMatrix;

use super::JointSpaceInertia;
use crate::autodiff::Scalar;
use crate::error::{check_len, Error, Result};
use crate::model::RobotModel;

pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Factorizes the row-major `n x n` matrix `m` in place. On return its lower
/// triangle (restricted to ancestor pairs) holds `L`.
pub(crate) fn ltl_factor_generic<S: Scalar>(m: &mut [S], parents: &[Option<usize>]) -> Result<()> {
    let n = parents.len();
    for k in (0..n).rev() {
        let pivot = m[k * n + k];
        if pivot.value() <= PIVOT_TOLERANCE {
            return Err(Error::Numerical(format!(
                "pivot {} at row {k} is not positive",
                pivot.value()
            )));
        }
        let lkk = pivot.sqrt();
        m[k * n + k] = lkk;
        let inv = lkk.recip();
        let mut i = parents[k];
        while let Some(ii) = i {
            m[k * n + ii] *= inv;
            i = parents[ii];
        }
        let mut i = parents[k];
        while let Some(ii) = i {
            let lki = m[k * n + ii];
            let mut j = Some(ii);
            while let Some(jj) = j {
                let t = lki * m[k * n + jj];
                m[ii * n + jj] -= t;
                j = parents[jj];
            }
            i = parents[ii];
        }
    }
    Ok(())
}

/// Solves `L^T L x = b` in place, using a factor from [`ltl_factor_generic`].
pub(crate) fn ltl_solve_generic<S: Scalar>(l: &[S], parents: &[Option<usize>], b: &mut [S]) {
    let n = parents.len();
    for i in (0..n).rev() {
        b[i] = b[i] / l[i * n + i];
        let bi = b[i];
        let mut j = parents[i];
        while let Some(jj) = j {
            let t = l[i * n + jj] * bi;
            b[jj] -= t;
            j = parents[jj];
        }
    }
    for i in 0..n {
        let mut j = parents[i];
        while let Some(jj) = j {
            let t = l[i * n + jj] * b[jj];
            b[i] -= t;
            j = parents[jj];
        }
        b[i] = b[i] / l[i * n + i];
    }
}

/// Dense symmetric positive-definite solve (chain-ordered `L^T L`), for
/// small matrices that have no tree structure.
pub(crate) fn cholesky_solve_in_place<S: Scalar>(a: &mut [S], n: usize, b: &mut [S]) -> Result<()> {
    let parents: Vec<Option<usize>> = (0..n).map(|i| i.checked_sub(1)).collect();
    ltl_factor_generic(a, &parents)?;
    ltl_solve_generic(a, &parents, b);
    Ok(())
}

/// `L^T L` factor of a joint-space inertia matrix.
#[derive(Clone, Debug)]
pub struct LtLFactorization {
    l: DMatrix<f64>,
    parents: Vec<Option<usize>>,
}

/// Factorizes `M` using the DoF tree of `model`.
pub fn ltl_factorize(m: &JointSpaceInertia<f64>, model: &RobotModel) -> Result<LtLFactorization> {
    let parents = model.dof_parents();
    check_len("inertia matrix", parents.len(), m.dim())?;
    let n = parents.len();
    let mut data = m.as_slice().to_vec();
    ltl_factor_generic(&mut data, &parents)?;
    let mut l = DMatrix::zeros(n, n);
    for k in 0..n {
        l[(k, k)] = data[k * n + k];
        let mut i = parents[k];
        while let Some(ii) = i {
            l[(k, ii)] = data[k * n + ii];
            i = parents[ii];
        }
    }
    Ok(LtLFactorization { l, parents })
}

impl LtLFactorization {
    /// Lower-triangular factor with `L^T L = M`.
    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Returns `M^{-1} b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.parents.len();
        check_len("right-hand side", n, b.len())?;
        let data: Vec<f64> = (0..n * n).map(|k| self.l[(k / n, k % n)]).collect();
        let mut x = b.to_vec();
        ltl_solve_generic(&data, &self.parents, &mut x);
        Ok(x)
    }

    /// Returns `M^{-1} B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            let col: Vec<f64> = b.column(c).iter().copied().collect();
            let x = self.solve(&col)?;
            out.column_mut(c).copy_from_slice(&x);
        }
        Ok(out)
    }
}
