//! Featherstone recursions over a kinematic tree, generic in the scalar type.
//!
//! Gravity enters as a fictitious acceleration of the world frame, so none
//! of the algorithms branch on the state. External forces are given per link
//! in link coordinates.

mod aba;
mod crba;
mod ltl;
mod rnea;

pub use aba::aba;
pub use crba::{crba, JointSpaceInertia};
pub use ltl::{ltl_factorize, LtLFactorization};
pub use rnea::{nonlinear_terms, rnea};

pub(crate) use ltl::{cholesky_solve_in_place, ltl_factor_generic, ltl_solve_generic};

use crate::autodiff::Scalar;
use crate::error::{check_len, Result};
use crate::model::{JointKind, ModelParams};
use crate::spatial::{ForceVector, Mat3, MotionVector, SpatialTransform, Vec3};

/// Transform from the parent frame to link `i` at joint position `q`
/// (the link's slice of the generalized coordinates).
pub fn link_transform<S: Scalar>(p: &ModelParams<'_, S>, i: usize, q: &[S]) -> SpatialTransform<S> {
    let link = &p.model.links[i];
    let lp = &p.links[i];
    match link.joint.kind {
        JointKind::Revolute => {
            let e = axis_rotation_transpose(link.joint.axis, &lp.axis, q[0]);
            SpatialTransform::new(e, Vec3::zero()).compose(&lp.tree)
        }
        JointKind::Prismatic => {
            SpatialTransform::from_translation(lp.axis.scale(q[0])).compose(&lp.tree)
        }
        JointKind::Floating => base_transform(q),
    }
}

/// World-to-base transform for a floating base with coordinates
/// `[euler xyz, position]`.
pub(crate) fn base_transform<S: Scalar>(q: &[S]) -> SpatialTransform<S> {
    let r = Mat3::from_euler_xyz(q[0], q[1], q[2]);
    SpatialTransform::new(r.transpose(), Vec3::new(q[3], q[4], q[5]))
}

/// `R(axis, angle)^T`, using the elementary rotations for coordinate axes.
fn axis_rotation_transpose<S: Scalar>(raw: [f64; 3], axis: &Vec3<S>, angle: S) -> Mat3<S> {
    match raw {
        [1.0, 0.0, 0.0] => Mat3::rot_x(-angle),
        [0.0, 1.0, 0.0] => Mat3::rot_y(-angle),
        [0.0, 0.0, 1.0] => Mat3::rot_z(-angle),
        [-1.0, 0.0, 0.0] => Mat3::rot_x(angle),
        [0.0, -1.0, 0.0] => Mat3::rot_y(angle),
        [0.0, 0.0, -1.0] => Mat3::rot_z(angle),
        _ => Mat3::axis_angle(axis, -angle),
    }
}

/// Motion subspace column of a single-DoF joint.
pub(crate) fn joint_axis<S: Scalar>(p: &ModelParams<'_, S>, i: usize) -> MotionVector<S> {
    let axis = p.links[i].axis;
    match p.model.links[i].joint.kind {
        JointKind::Prismatic => MotionVector::new(Vec3::zero(), axis),
        _ => MotionVector::new(axis, Vec3::zero()),
    }
}

/// Joint velocity `S_i * qd_i`.
pub fn joint_velocity<S: Scalar>(p: &ModelParams<'_, S>, i: usize, qd: &[S]) -> MotionVector<S> {
    match p.model.links[i].joint.kind {
        JointKind::Floating => MotionVector::from_array([qd[0], qd[1], qd[2], qd[3], qd[4], qd[5]]),
        _ => joint_axis(p, i).scale(qd[0]),
    }
}

/// `S_i^T f`.
pub(crate) fn project_force<S: Scalar>(
    p: &ModelParams<'_, S>,
    i: usize,
    f: &ForceVector<S>,
    out: &mut [S],
) {
    let axis = &p.links[i].axis;
    match p.model.links[i].joint.kind {
        JointKind::Revolute => out[0] = axis.dot(&f.torque),
        JointKind::Prismatic => out[0] = axis.dot(&f.force),
        JointKind::Floating => out.copy_from_slice(&f.to_array()),
    }
}

/// Spatial gravity acceleration of the world frame, negated.
pub(crate) fn gravity_bias<S: Scalar>(p: &ModelParams<'_, S>) -> MotionVector<S> {
    MotionVector::new(Vec3::zero(), -p.gravity)
}

pub(crate) fn check_state<S>(p: &ModelParams<'_, S>, q: &[S], v: &[S]) -> Result<()> {
    let d = p.model.dimensions();
    check_len("q", d.nq, q.len())?;
    check_len("qd", d.nv, v.len())
}

pub(crate) fn check_ext<S>(p: &ModelParams<'_, S>, ext: Option<&[ForceVector<S>]>) -> Result<()> {
    if let Some(f) = ext {
        check_len("external forces", p.model.n_links(), f.len())?;
    }
    Ok(())
}

/// Velocity coordinates owned by link `i`.
#[inline]
pub fn dofs<S>(p: &ModelParams<'_, S>, i: usize) -> std::ops::Range<usize> {
    let o = p.model.dof_offset(i);
    o..o + p.model.links[i].joint.kind.dof()
}

#[cfg(test)]
mod tests;
