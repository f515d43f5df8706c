//! The dynamics maps whose Jacobians are exposed, as [`VectorFunction`]s.

use std::sync::Arc;

use crate::autodiff::{Scalar, VectorFunction};
use crate::contact::{contact_link_forces, ContactModelParams};
use crate::dynamics::{
    aba, cholesky_solve_in_place, crba, ltl_factor_generic, ltl_solve_generic, rnea,
};
use crate::error::{check_len, Error, Result};
use crate::kinematics::end_effector_kinematics;
use crate::model::{ModelParams, RobotModel};
use crate::spatial::{Mat3, SpatialInertia, Vec3};

/// Number of inertial parameters per link: mass, center of mass and the six
/// independent entries of the rotational inertia about the center of mass
/// (`ixx iyy izz ixy ixz iyz`).
pub const INERTIAL_PARAMETERS_PER_LINK: usize = 10;

/// Soft contact at a set of end-effectors.
#[derive(Clone, Debug)]
pub struct ContactSetup {
    pub params: ContactModelParams,
    pub end_effectors: Vec<usize>,
}

fn contact_forces<S: Scalar>(
    p: &ModelParams<'_, S>,
    contact: Option<&ContactSetup>,
    q: &[S],
    qd: &[S],
) -> Result<Option<Vec<crate::spatial::ForceVector<S>>>> {
    contact
        .map(|c| contact_link_forces(p, &c.params, &c.end_effectors, q, qd))
        .transpose()
}

/// `[q, qd, u] -> qdd`, with `u` the actuated torques.
#[derive(Clone, Debug)]
pub struct ForwardDynamics {
    model: Arc<RobotModel>,
    contact: Option<ContactSetup>,
}

impl ForwardDynamics {
    pub fn new(model: Arc<RobotModel>) -> Self {
        ForwardDynamics {
            model,
            contact: None,
        }
    }

    pub fn with_contact(model: Arc<RobotModel>, contact: ContactSetup) -> Result<Self> {
        contact.params.validate()?;
        if let Some(&e) = contact
            .end_effectors
            .iter()
            .find(|&&e| e >= model.end_effectors.len())
        {
            return Err(Error::UnknownEndEffector(format!("#{e}")));
        }
        Ok(ForwardDynamics {
            model,
            contact: Some(contact),
        })
    }

    pub fn model(&self) -> &RobotModel {
        &self.model
    }
}

impl VectorFunction for ForwardDynamics {
    fn n_inputs(&self) -> usize {
        let d = self.model.dimensions();
        d.nq + d.nv + d.nu
    }

    fn n_outputs(&self) -> usize {
        self.model.dimensions().nv
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        check_len("forward dynamics input", self.n_inputs(), x.len())?;
        let d = self.model.dimensions();
        let (q, rest) = x.split_at(d.nq);
        let (qd, u) = rest.split_at(d.nv);
        let p = self.model.params::<S>();
        let tau = self.model.apply_selection_transpose(u)?;
        let ext = contact_forces(&p, self.contact.as_ref(), q, qd)?;
        aba(&p, q, qd, &tau, ext.as_deref())
    }
}

/// `[q, qd, qdd, theta] -> tau` over all generalized coordinates, where
/// `theta` holds the inertial parameters of the selected links.
#[derive(Clone, Debug)]
pub struct InverseDynamics {
    model: Arc<RobotModel>,
    contact: Option<ContactSetup>,
    inertial_links: Vec<usize>,
}

impl InverseDynamics {
    pub fn new(model: Arc<RobotModel>) -> Self {
        InverseDynamics {
            model,
            contact: None,
            inertial_links: Vec::new(),
        }
    }

    pub fn with_contact(mut self, contact: ContactSetup) -> Self {
        self.contact = Some(contact);
        self
    }

    /// Appends [`INERTIAL_PARAMETERS_PER_LINK`] inputs per listed link.
    pub fn with_inertial_parameters(mut self, links: Vec<usize>) -> Result<Self> {
        if let Some(&l) = links.iter().find(|&&l| l >= self.model.n_links()) {
            return Err(Error::Validation(format!("no link #{l}")));
        }
        self.inertial_links = links;
        Ok(self)
    }

    /// Current inertial parameters of the selected links, in input order.
    pub fn inertial_parameters(&self) -> Vec<f64> {
        self.inertial_links
            .iter()
            .flat_map(|&l| {
                let i = &self.model.links[l].inertia;
                let mut v = vec![i.mass];
                v.extend(i.com);
                v.extend(i.moments);
                v
            })
            .collect()
    }
}

impl VectorFunction for InverseDynamics {
    fn n_inputs(&self) -> usize {
        3 * self.model.dimensions().nv + INERTIAL_PARAMETERS_PER_LINK * self.inertial_links.len()
    }

    fn n_outputs(&self) -> usize {
        self.model.dimensions().nv
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        check_len("inverse dynamics input", self.n_inputs(), x.len())?;
        let nv = self.model.dimensions().nv;
        let (q, rest) = x.split_at(nv);
        let (qd, rest) = rest.split_at(nv);
        let (qdd, theta) = rest.split_at(nv);
        let mut p = self.model.params::<S>();
        for (&l, t) in self
            .inertial_links
            .iter()
            .zip(theta.chunks_exact(INERTIAL_PARAMETERS_PER_LINK))
        {
            let tensor = Mat3([[t[4], t[7], t[8]], [t[7], t[5], t[9]], [t[8], t[9], t[6]]]);
            p.set_inertia(
                l,
                SpatialInertia::new(t[0], Vec3::new(t[1], t[2], t[3]), tensor),
            );
        }
        let ext = contact_forces(&p, self.contact.as_ref(), q, qd)?;
        rnea(&p, q, qd, qdd, ext.as_deref())
    }
}

/// `[q, qd, qdd_a] -> tau_a` for an underactuated floating-base model:
/// `tau = (S M^-1 S^T)^-1 (qdd_a + S M^-1 h)` with `h = rnea(q, qd, 0)`.
#[derive(Clone, Debug)]
pub struct FloatingBaseInverseDynamics {
    model: Arc<RobotModel>,
    contact: Option<ContactSetup>,
    /// Treat every coordinate as actuated (`S = I`).
    welded: bool,
}

impl FloatingBaseInverseDynamics {
    pub fn new(model: Arc<RobotModel>) -> Result<Self> {
        if !model.has_floating_base() {
            return Err(Error::NotFloatingBase);
        }
        Ok(FloatingBaseInverseDynamics {
            model,
            contact: None,
            welded: false,
        })
    }

    pub fn with_contact(mut self, contact: ContactSetup) -> Self {
        self.contact = Some(contact);
        self
    }

    /// Full actuation, for checking the `S = I` limit on any model.
    #[cfg(test)]
    pub(crate) fn welded(model: Arc<RobotModel>) -> Self {
        FloatingBaseInverseDynamics {
            model,
            contact: None,
            welded: true,
        }
    }

    fn actuated(&self) -> (usize, usize) {
        if self.welded {
            (0, self.model.n_dof())
        } else {
            let d = self.model.dimensions();
            (self.model.actuated_offset(), d.nu)
        }
    }
}

impl VectorFunction for FloatingBaseInverseDynamics {
    fn n_inputs(&self) -> usize {
        2 * self.model.n_dof() + self.actuated().1
    }

    fn n_outputs(&self) -> usize {
        self.actuated().1
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        check_len(
            "floating-base inverse dynamics input",
            self.n_inputs(),
            x.len(),
        )?;
        let n = self.model.n_dof();
        let (off, na) = self.actuated();
        let (q, rest) = x.split_at(n);
        let (qd, qdd_a) = rest.split_at(n);
        let p = self.model.params::<S>();
        let ext = contact_forces(&p, self.contact.as_ref(), q, qd)?;
        let h = rnea(&p, q, qd, &vec![S::zero(); n], ext.as_deref())?;

        let parents = self.model.dof_parents();
        let mut l = crba(&p, q)?.as_slice().to_vec();
        ltl_factor_generic(&mut l, &parents)?;
        let mut minv_h = h;
        ltl_solve_generic(&l, &parents, &mut minv_h);

        // Operational-space inertia of the actuated coordinates, S M^-1 S^T.
        let mut a = vec![S::zero(); na * na];
        for j in 0..na {
            let mut col = vec![S::zero(); n];
            col[off + j] = S::one();
            ltl_solve_generic(&l, &parents, &mut col);
            for i in 0..na {
                a[i * na + j] = col[off + i];
            }
        }
        let mut tau: Vec<S> = (0..na).map(|i| qdd_a[i] + minv_h[off + i]).collect();
        cholesky_solve_in_place(&mut a, na, &mut tau)?;
        Ok(tau)
    }
}

/// `[q, qd] -> [p_1 .. p_k, pdot_1 .. pdot_k]` over all end-effectors.
#[derive(Clone, Debug)]
pub struct Kinematics {
    model: Arc<RobotModel>,
}

impl Kinematics {
    pub fn new(model: Arc<RobotModel>) -> Result<Self> {
        if model.end_effectors.is_empty() {
            return Err(Error::Validation(format!(
                "model `{}` has no end-effectors",
                model.name
            )));
        }
        Ok(Kinematics { model })
    }
}

impl VectorFunction for Kinematics {
    fn n_inputs(&self) -> usize {
        2 * self.model.n_dof()
    }

    fn n_outputs(&self) -> usize {
        6 * self.model.end_effectors.len()
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        check_len("kinematics input", self.n_inputs(), x.len())?;
        let (q, qd) = x.split_at(self.model.n_dof());
        end_effector_kinematics(&self.model.params::<S>(), q, qd)
    }
}

/// `q -> M(q)`, row-major.
#[derive(Clone, Debug)]
pub struct MassMatrix {
    model: Arc<RobotModel>,
}

impl MassMatrix {
    pub fn new(model: Arc<RobotModel>) -> Self {
        MassMatrix { model }
    }
}

impl VectorFunction for MassMatrix {
    fn n_inputs(&self) -> usize {
        self.model.n_dof()
    }

    fn n_outputs(&self) -> usize {
        self.model.n_dof().pow(2)
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        Ok(crba(&self.model.params::<S>(), x)?.as_slice().to_vec())
    }
}
