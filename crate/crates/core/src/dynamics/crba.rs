use super::{dofs, joint_axis, link_transform};
use crate::autodiff::Scalar;
use crate::error::{check_len, Result};
use crate::model::{JointKind, ModelParams};
use crate::spatial::MotionVector;

/// Dense symmetric joint-space inertia matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpaceInertia<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> JointSpaceInertia<S> {
    pub fn zeros(n: usize) -> Self {
        JointSpaceInertia {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        (0..self.n)
            .map(|i| (0..self.n).fold(S::zero(), |acc, j| acc + self.get(i, j) * x[j]))
            .collect()
    }
}

impl JointSpaceInertia<f64> {
    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

/// Joint-space inertia matrix by the composite-rigid-body algorithm.
pub fn crba<S: Scalar>(p: &ModelParams<'_, S>, q: &[S]) -> Result<JointSpaceInertia<S>> {
    let model = p.model;
    let nv = model.n_dof();
    check_len("q", nv, q.len())?;
    let n = model.n_links();
    let xs: Vec<_> = (0..n)
        .map(|i| link_transform(p, i, &q[dofs(p, i)]))
        .collect();
    let mut composite: Vec<_> = p.links.iter().map(|l| l.inertia).collect();
    for i in (0..n).rev() {
        if let Some(parent) = model.links[i].parent {
            let c = xs[i].inv_transform_rigid(&composite[i]);
            composite[parent] = composite[parent] + c;
        }
    }
    let mut m = JointSpaceInertia::zeros(nv);
    for i in 0..n {
        let cols = subspace(p, i);
        let base_i = model.dof_offset(i);
        for (a, s) in cols.iter().enumerate() {
            let mut f = composite[i].apply(s);
            for (b, sb) in cols.iter().enumerate() {
                m.set(base_i + a, base_i + b, sb.dot(&f));
            }
            let mut j = i;
            while let Some(parent) = model.links[j].parent {
                f = xs[j].inv_transform_force(&f);
                j = parent;
                let base_j = model.dof_offset(j);
                for (b, sb) in subspace(p, j).iter().enumerate() {
                    let v = sb.dot(&f);
                    m.set(base_i + a, base_j + b, v);
                    m.set(base_j + b, base_i + a, v);
                }
            }
        }
    }
    Ok(m)
}

fn subspace<S: Scalar>(p: &ModelParams<'_, S>, i: usize) -> Vec<MotionVector<S>> {
    match p.model.links[i].joint.kind {
        JointKind::Floating => (0..6)
            .map(|k| {
                let mut e = [S::zero(); 6];
                e[k] = S::one();
                MotionVector::from_array(e)
            })
            .collect(),
        _ => vec![joint_axis(p, i)],
    }
}
