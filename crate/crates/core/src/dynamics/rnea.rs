use super::{
    check_ext, check_state, dofs, gravity_bias, joint_velocity, link_transform, project_force,
};
use crate::autodiff::Scalar;
use crate::error::{check_len, Result};
use crate::model::ModelParams;
use crate::spatial::{ForceVector, Vec3};

/// Inverse dynamics: generalized forces producing `qdd` at `(q, qd)` under
/// gravity and the given external link forces.
pub fn rnea<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
    qd: &[S],
    qdd: &[S],
    ext: Option<&[ForceVector<S>]>,
) -> Result<Vec<S>> {
    check_state(p, q, qd)?;
    check_len("qdd", qd.len(), qdd.len())?;
    check_ext(p, ext)?;
    let n = p.model.n_links();
    let mut vel = Vec::with_capacity(n);
    let mut acc = Vec::with_capacity(n);
    let mut force = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let a_world = gravity_bias(p);
    for i in 0..n {
        let r = dofs(p, i);
        let x = link_transform(p, i, &q[r.clone()]);
        let vj = joint_velocity(p, i, &qd[r.clone()]);
        let aj = joint_velocity(p, i, &qdd[r]);
        let (v, a) = match p.model.links[i].parent {
            Some(parent) => {
                let v = x.transform_motion(&vel[parent]) + vj;
                let a = x.transform_motion(&acc[parent]) + aj + v.cross_motion(&vj);
                (v, a)
            }
            None => (vj, x.transform_motion(&a_world) + aj),
        };
        let inertia = &p.links[i].inertia;
        let mut f = inertia.apply(&a) + v.cross_force(&inertia.apply(&v));
        if let Some(ext) = ext {
            f -= ext[i];
        }
        vel.push(v);
        acc.push(a);
        force.push(f);
        xs.push(x);
    }
    let mut tau = vec![S::zero(); qd.len()];
    for i in (0..n).rev() {
        project_force(p, i, &force[i], &mut tau[dofs(p, i)]);
        if let Some(parent) = p.model.links[i].parent {
            let f = xs[i].inv_transform_force(&force[i]);
            force[parent] += f;
        }
    }
    Ok(tau)
}

/// Coriolis/centripetal terms `C(q, qd)` (gravity off) and gravity terms
/// `G(q)`.
pub fn nonlinear_terms<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
    qd: &[S],
) -> Result<(Vec<S>, Vec<S>)> {
    let zero = vec![S::zero(); qd.len()];
    let mut no_gravity = p.clone();
    no_gravity.gravity = Vec3::zero();
    let c = rnea(&no_gravity, q, qd, &zero, None)?;
    let g = rnea(p, q, &zero, &zero, None)?;
    Ok((c, g))
}
