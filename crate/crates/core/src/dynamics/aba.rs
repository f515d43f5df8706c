use super::{
    check_ext, check_state, dofs, gravity_bias, joint_axis, joint_velocity, link_transform,
};
use crate::autodiff::Scalar;
use crate::error::{check_len, Result};
use crate::model::{JointKind, ModelParams};
use crate::spatial::{ArticulatedInertia, ForceVector, MotionVector};

/// Forward dynamics by the articulated-body algorithm.
///
/// `tau` is in full generalized coordinates; for a floating base its first
/// six entries act directly on the trunk (normally zero).
pub fn aba<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
    qd: &[S],
    tau: &[S],
    ext: Option<&[ForceVector<S>]>,
) -> Result<Vec<S>> {
    check_state(p, q, qd)?;
    check_len("tau", qd.len(), tau.len())?;
    check_ext(p, ext)?;
    let model = p.model;
    let n = model.n_links();

    let mut xs = Vec::with_capacity(n);
    let mut vel: Vec<MotionVector<S>> = Vec::with_capacity(n);
    let mut bias = Vec::with_capacity(n);
    let mut ia = Vec::with_capacity(n);
    let mut pa = Vec::with_capacity(n);
    for i in 0..n {
        let r = dofs(p, i);
        let x = link_transform(p, i, &q[r.clone()]);
        let vj = joint_velocity(p, i, &qd[r]);
        let (v, c) = match model.links[i].parent {
            Some(parent) => {
                let v = x.transform_motion(&vel[parent]) + vj;
                (v, v.cross_motion(&vj))
            }
            None => (vj, MotionVector::zero()),
        };
        let inertia = &p.links[i].inertia;
        let mut pi = v.cross_force(&inertia.apply(&v));
        if let Some(ext) = ext {
            pi -= ext[i];
        }
        xs.push(x);
        vel.push(v);
        bias.push(c);
        ia.push(inertia.to_articulated());
        pa.push(pi);
    }

    // Per single-DoF joint: U = IA S, 1/D, u.
    let mut u_vec = vec![ForceVector::zero(); n];
    let mut inv_d = vec![S::zero(); n];
    let mut u_scalar = vec![S::zero(); n];
    for i in (0..n).rev() {
        if model.links[i].joint.kind == JointKind::Floating {
            continue;
        }
        let k = model.dof_offset(i);
        let s = joint_axis(p, i);
        let u = ia[i].apply(&s);
        let d_inv = s.dot(&u).recip();
        let ui = tau[k] - s.dot(&pa[i]);
        u_vec[i] = u;
        inv_d[i] = d_inv;
        u_scalar[i] = ui;
        if let Some(parent) = model.links[i].parent {
            let ia_art = ia[i].sub_rank_one(&u, d_inv);
            let pa_art = pa[i] + ia_art.apply(&bias[i]) + u.scale(ui * d_inv);
            let ia_parent = xs[i].inv_transform_articulated(&ia_art);
            let pa_parent = xs[i].inv_transform_force(&pa_art);
            ia[parent] += ia_parent;
            pa[parent] += pa_parent;
        }
    }

    let mut qdd = vec![S::zero(); qd.len()];
    let mut acc: Vec<MotionVector<S>> = Vec::with_capacity(n);
    let a_world = gravity_bias(p);
    for i in 0..n {
        let k = model.dof_offset(i);
        if model.links[i].joint.kind == JointKind::Floating {
            let rhs =
                ForceVector::from_array([tau[0], tau[1], tau[2], tau[3], tau[4], tau[5]]) - pa[i];
            let a = solve_sym6(&ia[i], &rhs);
            let base = a - xs[i].transform_motion(&a_world);
            qdd[k..k + 6].copy_from_slice(&base.to_array());
            acc.push(a);
            continue;
        }
        let parent_acc = match model.links[i].parent {
            Some(parent) => acc[parent],
            None => a_world,
        };
        let a_pre = xs[i].transform_motion(&parent_acc) + bias[i];
        let qddi = (u_scalar[i] - a_pre.dot(&u_vec[i])) * inv_d[i];
        qdd[k] = qddi;
        acc.push(a_pre + joint_axis(p, i).scale(qddi));
    }
    Ok(qdd)
}

/// Solves `ia * a = f` for a symmetric positive-definite 6x6 inertia by
/// an unpivoted LDL^T factorization.
fn solve_sym6<S: Scalar>(ia: &ArticulatedInertia<S>, f: &ForceVector<S>) -> MotionVector<S> {
    let mut m = ia.to_dense();
    let mut b = f.to_array();
    let mut d_inv = [S::zero(); 6];
    for j in 0..6 {
        let mut dj = m[j][j];
        for k in 0..j {
            dj -= m[j][k] * m[j][k] * m[k][k];
        }
        m[j][j] = dj;
        d_inv[j] = dj.recip();
        for i in j + 1..6 {
            let mut l = m[i][j];
            for k in 0..j {
                l -= m[i][k] * m[j][k] * m[k][k];
            }
            m[i][j] = l * d_inv[j];
        }
    }
    for i in 0..6 {
        for k in 0..i {
            let t = m[i][k] * b[k];
            b[i] -= t;
        }
    }
    for i in 0..6 {
        b[i] *= d_inv[i];
    }
    for i in (0..6).rev() {
        for k in i + 1..6 {
            let t = m[k][i] * b[k];
            b[i] -= t;
        }
    }
    MotionVector::from_array(b)
}
