//! Forward kinematics and end-effector quantities in the world frame.

use nalgebra::DMatrix;

use crate::autodiff::Scalar;
use crate::dynamics::{dofs, joint_velocity, link_transform};
use crate::error::{check_len, Result};
use crate::model::{JointKind, ModelParams};
use crate::spatial::{Mat3, MotionVector, SpatialTransform, Vec3};

/// World-to-link transforms for every link. The translation of each is the
/// link origin in world coordinates.
pub fn forward_kinematics<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
) -> Result<Vec<SpatialTransform<S>>> {
    check_len("q", p.model.n_dof(), q.len())?;
    let n = p.model.n_links();
    let mut world: Vec<SpatialTransform<S>> = Vec::with_capacity(n);
    for i in 0..n {
        let x = link_transform(p, i, &q[dofs(p, i)]);
        let x = match p.model.links[i].parent {
            Some(parent) => x.compose(&world[parent]),
            None => x,
        };
        world.push(x);
    }
    Ok(world)
}

fn ee_offset<S: Scalar>(p: &ModelParams<'_, S>, ee: usize) -> Result<(usize, SpatialTransform<S>)> {
    let e = p
        .model
        .end_effectors
        .get(ee)
        .ok_or_else(|| crate::Error::UnknownEndEffector(format!("#{ee}")))?;
    Ok((e.link, e.placement.transform()))
}

/// World-to-end-effector transform.
pub fn end_effector_transform<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
    ee: usize,
) -> Result<SpatialTransform<S>> {
    let (link, offset) = ee_offset(p, ee)?;
    let world = forward_kinematics(p, q)?;
    Ok(offset.compose(&world[link]))
}

/// End-effector origin in world coordinates.
pub fn end_effector_position<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
    ee: usize,
) -> Result<Vec3<S>> {
    Ok(end_effector_transform(p, q, ee)?.translation)
}

/// Body-coordinate spatial velocities of every link.
pub fn link_velocities<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
    qd: &[S],
) -> Result<Vec<MotionVector<S>>> {
    check_len("q", p.model.n_dof(), q.len())?;
    check_len("qd", p.model.n_dof(), qd.len())?;
    let n = p.model.n_links();
    let mut vel: Vec<MotionVector<S>> = Vec::with_capacity(n);
    for i in 0..n {
        let r = dofs(p, i);
        let vj = joint_velocity(p, i, &qd[r.clone()]);
        let v = match p.model.links[i].parent {
            Some(parent) => link_transform(p, i, &q[r]).transform_motion(&vel[parent]) + vj,
            None => vj,
        };
        vel.push(v);
    }
    Ok(vel)
}

/// World-frame velocity of the end-effector origin.
pub fn end_effector_velocity<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
    qd: &[S],
    ee: usize,
) -> Result<Vec3<S>> {
    let (link, offset) = ee_offset(p, ee)?;
    let world = forward_kinematics(p, q)?;
    let v = link_velocities(p, q, qd)?[link];
    Ok(point_velocity(&world[link], &v, &offset.translation))
}

pub(crate) fn point_velocity<S: Scalar>(
    world: &SpatialTransform<S>,
    v: &MotionVector<S>,
    r: &Vec3<S>,
) -> Vec3<S> {
    world.rotation.tmul_vec(&(v.linear + v.angular.cross(r)))
}

/// Geometric Jacobian of the end-effector: one column per velocity
/// coordinate holding the world-aligned angular velocity and the
/// world-frame linear velocity of the end-effector origin.
pub fn end_effector_jacobian<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
    ee: usize,
) -> Result<Vec<MotionVector<S>>> {
    let (link, offset) = ee_offset(p, ee)?;
    let model = p.model;
    let world = forward_kinematics(p, q)?;
    let ee_world = offset.compose(&world[link]).translation;
    let mut cols = vec![MotionVector::zero(); model.n_dof()];
    let mut j = Some(link);
    while let Some(ji) = j {
        let base = model.dof_offset(ji);
        let n = model.links[ji].joint.kind.dof();
        for k in 0..n {
            let mut unit = vec![S::zero(); n];
            unit[k] = S::one();
            let s = joint_velocity(p, ji, &unit);
            let w = world[ji].inv_transform_motion(&s);
            cols[base + k] = MotionVector::new(w.angular, w.linear + w.angular.cross(&ee_world));
        }
        j = model.links[ji].parent;
    }
    Ok(cols)
}

/// Packs Jacobian columns into a 6 x nv matrix.
pub fn jacobian_matrix(cols: &[MotionVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(6, cols.len(), |r, c| cols[c].to_array()[r])
}

/// Stacked positions then velocities of every end-effector:
/// `[p_1, .., p_k, pdot_1, .., pdot_k]`.
pub fn end_effector_kinematics<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
    qd: &[S],
) -> Result<Vec<S>> {
    let world = forward_kinematics(p, q)?;
    let vel = link_velocities(p, q, qd)?;
    let k = p.model.end_effectors.len();
    let mut out = vec![S::zero(); 6 * k];
    for (e, ee) in p.model.end_effectors.iter().enumerate() {
        let offset: SpatialTransform<S> = ee.placement.transform();
        let pos = offset.compose(&world[ee.link]).translation;
        let v = point_velocity(&world[ee.link], &vel[ee.link], &offset.translation);
        out[3 * e..3 * e + 3].copy_from_slice(&pos.0);
        out[3 * k + 3 * e..3 * k + 3 * e + 3].copy_from_slice(&v.0);
    }
    Ok(out)
}

/// Base rotation `R_WB` (body to world) from the Euler-angle coordinates.
pub fn base_rotation<S: Scalar>(q: &[S]) -> Mat3<S> {
    Mat3::from_euler_xyz(q[0], q[1], q[2])
}

/// Maps body-frame base velocities `(omega_B, v_B)` to the time derivative
/// of the base coordinates `(euler angles, world position)`.
pub fn base_coordinate_rates<S: Scalar>(q: &[S], v: &[S]) -> [S; 6] {
    let (sb, cb) = q[1].sin_cos();
    let (sc, cc) = q[2].sin_cos();
    let (wx, wy, wz) = (v[0], v[1], v[2]);
    let a_dot = (wx * cc - wy * sc) / cb;
    let b_dot = wx * sc + wy * cc;
    let c_dot = wz - sb * a_dot;
    let pos = base_rotation(q).mul_vec(&Vec3::new(v[3], v[4], v[5]));
    [a_dot, b_dot, c_dot, pos[0], pos[1], pos[2]]
}

/// Time derivative of every generalized coordinate given `qd`.
pub fn coordinate_rates<S: Scalar>(p: &ModelParams<'_, S>, q: &[S], qd: &[S]) -> Vec<S> {
    let mut out = qd.to_vec();
    if p.model
        .links
        .first()
        .is_some_and(|l| l.joint.kind == JointKind::Floating)
    {
        out[..6].copy_from_slice(&base_coordinate_rates(q, qd));
    }
    out
}
