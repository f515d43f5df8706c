//! Smooth soft-contact model on flat ground and the floating-base system
//! dynamics it feeds.
//!
//! Penetration is `pz = surface_height - foot_z`, positive below the
//! surface. The force on a foot is
//! `k * exp(alpha_k * pz) * z_hat - d * sig(alpha_d * pz) * pdot` with `sig`
//! the logistic function, so it pushes the foot out of the ground and damps
//! its velocity. The contact frame is world-aligned.

use std::sync::Arc;

use serde::Deserialize;

use crate::autodiff::{Scalar, VectorFunction};
use crate::dynamics::aba;
use crate::error::{check_len, Error, Result};
use crate::kinematics::{
    base_rotation, coordinate_rates, forward_kinematics, link_velocities, point_velocity,
};
use crate::model::{ModelParams, RobotModel};
use crate::spatial::{ForceVector, SpatialTransform, Vec3};

/// Pitch beyond which the Euler-rate map is considered singular.
pub const PITCH_SINGULARITY_GUARD: f64 = 1.35;

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactModelParams {
    /// Spring constant (N).
    pub k: f64,
    /// Damper constant (N s/m).
    pub d: f64,
    /// Exponential sharpness (1/m).
    pub alpha_k: f64,
    /// Sigmoid sharpness (1/m).
    pub alpha_d: f64,
    /// Height of the ground plane (m).
    pub surface_height: f64,
}

impl Default for ContactModelParams {
    /// Tuning for the quadruped fixture: about 1 cm of penetration when
    /// standing.
    fn default() -> Self {
        ContactModelParams {
            k: 120.0,
            d: 1000.0,
            alpha_k: 50.0,
            alpha_d: 50.0,
            surface_height: 0.0,
        }
    }
}

impl ContactModelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k", self.k),
            ("d", self.d),
            ("alpha_k", self.alpha_k),
            ("alpha_d", self.alpha_d),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "contact parameter {name} must be positive, got {v}"
                )));
            }
        }
        if !self.surface_height.is_finite() {
            return Err(Error::Config("surface height must be finite".into()));
        }
        Ok(())
    }
}

/// Contact force in the contact frame for penetration `pz` and foot
/// velocity `pdot`.
pub fn contact_force_contact_frame<S: Scalar>(
    params: &ContactModelParams,
    pz: S,
    pdot: &Vec3<S>,
) -> Vec3<S> {
    let spring = S::from_f64(params.k) * (S::from_f64(params.alpha_k) * pz).exp();
    let damping = S::from_f64(params.d) * (S::from_f64(params.alpha_d) * pz).sigmoid();
    let mut f = pdot.scale(-damping);
    f[2] += spring;
    f
}

/// Hip flexion of the quad18 standing pose (knees at -1.2) that balances
/// the pitch moment, front and hind legs alike.
pub const BALANCED_HIP_FLEXION: f64 = 0.612_302_452_108_262_6;

/// A contact model attached to a set of end-effectors.
#[derive(Clone, Debug)]
pub struct SystemDynamicsConfig {
    pub model: Arc<RobotModel>,
    pub contact: ContactModelParams,
    /// End-effector indices acting as contact points.
    pub end_effectors: Vec<usize>,
}

impl SystemDynamicsConfig {
    pub fn new(
        model: Arc<RobotModel>,
        contact: ContactModelParams,
        end_effectors: Vec<usize>,
    ) -> Result<Self> {
        contact.validate()?;
        for &e in &end_effectors {
            if e >= model.end_effectors.len() {
                return Err(Error::UnknownEndEffector(format!("#{e}")));
            }
        }
        Ok(SystemDynamicsConfig {
            model,
            contact,
            end_effectors,
        })
    }

    /// Uses every registered end-effector as a contact point.
    pub fn all_feet(model: Arc<RobotModel>, contact: ContactModelParams) -> Result<Self> {
        let feet = (0..model.end_effectors.len()).collect();
        Self::new(model, contact, feet)
    }

    pub fn from_names(
        model: Arc<RobotModel>,
        contact: ContactModelParams,
        names: &[String],
    ) -> Result<Self> {
        let feet = names
            .iter()
            .map(|n| model.end_effector_index(n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(model, contact, feet)
    }
}

/// One foot's contact force in several frames.
#[derive(Clone, Copy, Debug)]
pub struct ContactForce<S> {
    /// Contact (world-aligned) frame.
    pub contact_frame: Vec3<S>,
    /// Base body frame, `R_WB^T * contact_frame`; the contact frame itself
    /// for fixed-base models.
    pub body_frame: Vec3<S>,
    /// Spatial force on the foot's link, in link coordinates.
    pub link_force: ForceVector<S>,
}

struct FootState<S> {
    link: usize,
    offset: SpatialTransform<S>,
    world: SpatialTransform<S>,
    velocity: Vec3<S>,
}

fn foot_states<S: Scalar>(
    p: &ModelParams<'_, S>,
    q: &[S],
    qd: &[S],
    feet: &[usize],
) -> Result<Vec<FootState<S>>> {
    let world = forward_kinematics(p, q)?;
    let vel = link_velocities(p, q, qd)?;
    feet.iter()
        .map(|&e| {
            let ee = p
                .model
                .end_effectors
                .get(e)
                .ok_or_else(|| Error::UnknownEndEffector(format!("#{e}")))?;
            let offset: SpatialTransform<S> = ee.placement.transform();
            let velocity = point_velocity(&world[ee.link], &vel[ee.link], &offset.translation);
            Ok(FootState {
                link: ee.link,
                world: offset.compose(&world[ee.link]),
                offset,
                velocity,
            })
        })
        .collect()
}

fn foot_force<S: Scalar>(
    params: &ContactModelParams,
    foot: &FootState<S>,
    link_world: &SpatialTransform<S>,
) -> ContactForce<S> {
    let pz = S::from_f64(params.surface_height) - foot.world.translation[2];
    let lambda = contact_force_contact_frame(params, pz, &foot.velocity);
    let force = link_world.rotation.mul_vec(&lambda);
    let torque = foot.offset.translation.cross(&force);
    ContactForce {
        contact_frame: lambda,
        body_frame: lambda,
        link_force: ForceVector::new(torque, force),
    }
}

/// Contact force at foot `foot` (an index into `config.end_effectors`).
pub fn contact_force_body_frame<S: Scalar>(
    config: &SystemDynamicsConfig,
    q: &[S],
    qd: &[S],
    foot: usize,
) -> Result<ContactForce<S>> {
    let &e = config
        .end_effectors
        .get(foot)
        .ok_or_else(|| Error::UnknownEndEffector(format!("contact #{foot}")))?;
    let p = config.model.params::<S>();
    let states = foot_states(&p, q, qd, &[e])?;
    let link_world = forward_kinematics(&p, q)?[states[0].link];
    let mut f = foot_force(&config.contact, &states[0], &link_world);
    if config.model.has_floating_base() {
        f.body_frame = base_rotation(q).tmul_vec(&f.contact_frame);
    }
    Ok(f)
}

/// Per-link external forces from every contact point, in link coordinates.
pub fn contact_link_forces<S: Scalar>(
    p: &ModelParams<'_, S>,
    params: &ContactModelParams,
    feet: &[usize],
    q: &[S],
    qd: &[S],
) -> Result<Vec<ForceVector<S>>> {
    let world = forward_kinematics(p, q)?;
    let states = foot_states(p, q, qd, feet)?;
    let mut ext = vec![ForceVector::zero(); p.model.n_links()];
    for s in &states {
        ext[s.link] += foot_force(params, s, &world[s.link]).link_force;
    }
    Ok(ext)
}

/// `[q, qd] -> [lambda_1 .. lambda_k]`, the contact-frame force at every
/// contact point.
#[derive(Clone, Debug)]
pub struct ContactForces {
    config: SystemDynamicsConfig,
}

impl ContactForces {
    pub fn new(config: SystemDynamicsConfig) -> Self {
        ContactForces { config }
    }
}

impl VectorFunction for ContactForces {
    fn n_inputs(&self) -> usize {
        2 * self.config.model.n_dof()
    }

    fn n_outputs(&self) -> usize {
        3 * self.config.end_effectors.len()
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        check_len("contact force input", self.n_inputs(), x.len())?;
        let (q, qd) = x.split_at(self.config.model.n_dof());
        let p = self.config.model.params::<S>();
        let world = forward_kinematics(&p, q)?;
        let states = foot_states(&p, q, qd, &self.config.end_effectors)?;
        Ok(states
            .iter()
            .flat_map(|s| {
                foot_force(&self.config.contact, s, &world[s.link])
                    .contact_frame
                    .0
            })
            .collect())
    }
}

/// `xdot = [H_WB(q) qd ; fd(q, qd, S^T u + contact)]` over the state
/// `x = [q, qd]` with body-frame base velocities. Fixed-base models have
/// `H_WB = I`; an empty contact list gives the free dynamics.
#[derive(Clone, Debug)]
pub struct SystemDynamics {
    config: SystemDynamicsConfig,
}

impl SystemDynamics {
    pub fn new(config: SystemDynamicsConfig) -> Self {
        SystemDynamics { config }
    }

    /// Dynamics without contact.
    pub fn free(model: Arc<RobotModel>) -> Self {
        SystemDynamics {
            config: SystemDynamicsConfig {
                model,
                contact: ContactModelParams::default(),
                end_effectors: Vec::new(),
            },
        }
    }

    pub fn config(&self) -> &SystemDynamicsConfig {
        &self.config
    }

    pub fn n_state(&self) -> usize {
        let d = self.config.model.dimensions();
        d.nq + d.nv
    }

    pub fn n_control(&self) -> usize {
        self.config.model.dimensions().nu
    }

    /// State derivative at `(x, u)`.
    pub fn eval_state<S: Scalar>(&self, x: &[S], u: &[S]) -> Result<Vec<S>> {
        let model = &*self.config.model;
        let d = model.dimensions();
        check_len("state", d.nq + d.nv, x.len())?;
        check_len("control", d.nu, u.len())?;
        let (q, qd) = x.split_at(d.nq);
        if model.has_floating_base() {
            let pitch = q[1].value();
            if pitch.abs() > PITCH_SINGULARITY_GUARD {
                return Err(Error::SingularOrientation { pitch });
            }
        }
        let p = model.params::<S>();
        let tau = model.apply_selection_transpose(u)?;
        let qdd = if self.config.end_effectors.is_empty() {
            aba(&p, q, qd, &tau, None)?
        } else {
            let ext =
                contact_link_forces(&p, &self.config.contact, &self.config.end_effectors, q, qd)?;
            aba(&p, q, qd, &tau, Some(&ext))?
        };
        let mut out = coordinate_rates(&p, q, qd);
        out.extend(qdd);
        Ok(out)
    }
}

impl VectorFunction for SystemDynamics {
    fn n_inputs(&self) -> usize {
        self.n_state() + self.n_control()
    }

    fn n_outputs(&self) -> usize {
        self.n_state()
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        check_len("system dynamics input", self.n_inputs(), x.len())?;
        let (x, u) = x.split_at(self.n_state());
        self.eval_state(x, u)
    }
}

/// A level, motionless floating-base state held up by the contact forces.
#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    pub q: Vec<f64>,
    /// Joint torques that hold the pose.
    pub u: Vec<f64>,
}

/// Finds the base height at which the contacts carry the robot's weight for
/// the given joint angles, by bisection on the vertical base force.
pub fn standing_equilibrium(config: &SystemDynamicsConfig, joints: &[f64]) -> Result<Equilibrium> {
    let model = &*config.model;
    if !model.has_floating_base() {
        return Err(Error::NotFloatingBase);
    }
    check_len("joint angles", model.dimensions().nu, joints.len())?;
    let p = model.params::<f64>();
    let zero = vec![0.0; model.n_dof()];
    let q_at = |h: f64| {
        let mut q = vec![0.0; 6];
        q[5] = h;
        q.extend_from_slice(joints);
        q
    };
    let generalized = |h: f64| -> Result<Vec<f64>> {
        let q = q_at(h);
        let ext = contact_link_forces(&p, &config.contact, &config.end_effectors, &q, &zero)?;
        crate::dynamics::rnea(&p, &q, &zero, &zero, Some(&ext))
    };
    // Base height that puts the lowest contact point on the surface.
    let q0 = q_at(0.0);
    let world = forward_kinematics(&p, &q0)?;
    let lowest = config
        .end_effectors
        .iter()
        .map(|&e| {
            let ee = &model.end_effectors[e];
            ee.offset().compose(&world[ee.link]).translation[2]
        })
        .fold(f64::INFINITY, f64::min);
    if !lowest.is_finite() {
        return Err(Error::Validation("no contact points".into()));
    }
    let touch = config.contact.surface_height - lowest;
    // The vertical base force is needed support: positive in the air,
    // negative when pushed too deep.
    let (mut lo, mut hi) = (touch - 1.0, touch + 1.0);
    if generalized(lo)?[5] > 0.0 || generalized(hi)?[5] < 0.0 {
        return Err(Error::Numerical(
            "no standing height within 1 m of touchdown".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if generalized(mid)?[5] > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let h = 0.5 * (lo + hi);
    let tau = generalized(h)?;
    Ok(Equilibrium {
        q: q_at(h),
        u: tau[6..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{forward_jacobian, Dual};
    use crate::deriv::{numdiff_jacobian, DifferenceScheme};
    use crate::model::fixture;
    use crate::sampling::StateSampler;

    fn quad_config() -> SystemDynamicsConfig {
        let m = Arc::new(fixture("quad18").unwrap());
        SystemDynamicsConfig::all_feet(m, ContactModelParams::default()).unwrap()
    }

    /// Pitch acceleration of the standing pose with hip flexion `upper`.
    fn pitch_residual(c: &SystemDynamicsConfig, upper: f64) -> (Equilibrium, Vec<f64>) {
        let joints: Vec<f64> = (0..4).flat_map(|_| [0.0, upper, -1.2]).collect();
        let eq = standing_equilibrium(c, &joints).unwrap();
        let x = [eq.q.clone(), vec![0.0; 18]].concat();
        let xd = SystemDynamics::new(c.clone())
            .eval_state(&x, &eq.u)
            .unwrap();
        (eq, xd)
    }

    fn standing(c: &SystemDynamicsConfig) -> Equilibrium {
        pitch_residual(c, BALANCED_HIP_FLEXION).0
    }

    /// States scattered around the standing pose, so that contact is active.
    fn near_ground(c: &SystemDynamicsConfig, s: &mut StateSampler) -> Vec<f64> {
        let eq = standing(c);
        let q: Vec<f64> =
            eq.q.iter()
                .zip(s.uniform(18, -0.05, 0.05))
                .map(|(a, b)| a + b)
                .collect();
        [
            q,
            s.uniform(18, -1.0, 1.0),
            eq.u.iter()
                .zip(s.uniform(12, -5.0, 5.0))
                .map(|(a, b)| a + b)
                .collect(),
        ]
        .concat()
    }

    fn rel_diff(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
        (a - b).amax() / a.amax().max(b.amax()).max(1.0)
    }

    #[test]
    fn force_vanishes_far_above_ground() {
        let p = ContactModelParams::default();
        let f = contact_force_contact_frame(&p, -10.0, &Vec3::zero());
        assert!(f.norm() < 1e-200 * p.k);
        let moving = contact_force_contact_frame(&p, -10.0, &Vec3::new(1.0, -2.0, 3.0));
        assert!(moving.norm() < 1e-200 * p.k);
    }

    #[test]
    fn force_at_surface_is_stiffness() {
        let p = ContactModelParams::default();
        let f = contact_force_contact_frame(&p, 0.0, &Vec3::zero());
        assert_eq!(f.0, [0.0, 0.0, p.k]);
    }

    #[test]
    fn force_gradient_matches_central_differences() {
        let p = ContactModelParams::default();
        let f = |x: &[f64]| {
            Ok(
                contact_force_contact_frame(&p, x[0], &Vec3::new(x[1], x[2], x[3]))
                    .0
                    .to_vec(),
            )
        };
        let mut s = StateSampler::new(31);
        for _ in 0..100 {
            let mut x = s.uniform(4, -1.0, 1.0);
            x[0] *= 0.05;
            let xs: Vec<Dual<f64, 4>> = x
                .iter()
                .enumerate()
                .map(|(k, &v)| Dual::variable(v, k))
                .collect();
            let fd = contact_force_contact_frame(&p, xs[0], &Vec3::new(xs[1], xs[2], xs[3]));
            let ad = nalgebra::DMatrix::from_fn(3, 4, |r, c| fd[r].eps[c]);
            let nd = numdiff_jacobian(f, &x, DifferenceScheme::Central).unwrap();
            assert!(rel_diff(&ad, &nd) < 1e-6, "{:e}", rel_diff(&ad, &nd));
        }
    }

    #[test]
    fn damping_never_injects_power() {
        let p = ContactModelParams::default();
        let mut s = StateSampler::new(32);
        for _ in 0..1000 {
            let x = s.uniform(4, -1.0, 1.0);
            let pz = 0.05 * x[0].abs();
            let v = Vec3::new(x[1], x[2], x[3].abs());
            let spring = contact_force_contact_frame(&p, pz, &Vec3::zero());
            let damping = contact_force_contact_frame(&p, pz, &v) - spring;
            assert!(damping.dot(&v) <= 0.0);
        }
    }

    #[test]
    fn body_frame_force_for_level_base_equals_contact_frame() {
        let c = quad_config();
        let eq = standing(&c);
        let qd = vec![0.1; 18];
        for foot in 0..4 {
            let f = contact_force_body_frame(&c, &eq.q, &qd, foot).unwrap();
            assert_eq!(f.body_frame.0, f.contact_frame.0);
        }
    }

    #[test]
    fn rotation_preserves_force_norm() {
        let c = quad_config();
        let mut s = StateSampler::new(33);
        for _ in 0..20 {
            let x = near_ground(&c, &mut s);
            let mut q = x[..18].to_vec();
            q[..3].copy_from_slice(&s.uniform(3, -0.5, 0.5));
            for foot in 0..4 {
                let f = contact_force_body_frame(&c, &q, &x[18..36], foot).unwrap();
                let (a, b) = (f.body_frame.norm(), f.contact_frame.norm());
                assert!((a - b).abs() < 1e-12 * b.max(1.0));
                let link = f.link_force.force.norm();
                assert!((link - b).abs() < 1e-12 * b.max(1.0));
            }
        }
    }

    #[test]
    fn foot_one_meter_above_ground_feels_nothing() {
        let mut c = quad_config();
        c.contact.alpha_k = 100.0;
        let eq = standing(&c);
        let foot_z = |c: &SystemDynamicsConfig| {
            let p = c.model.params::<f64>();
            crate::kinematics::end_effector_position(&p, &eq.q, 0).unwrap()[2]
        };
        c.contact.surface_height = foot_z(&c) - 1.0;
        let f = contact_force_body_frame(&c, &eq.q, &[0.0; 18], 0).unwrap();
        assert!(f.contact_frame.norm() < 1e-10 * c.contact.k);
    }

    #[test]
    fn forces_decay_exponentially_with_clearance() {
        let p = ContactModelParams::default();
        let at = |clearance: f64| {
            contact_force_contact_frame(&p, -clearance / p.alpha_k, &Vec3::zero()).norm()
        };
        // exp(-5) bounds the force at 5 / alpha_k; 1e-9 * k needs 21 / alpha_k.
        assert!(at(5.0) <= p.k * (-5.0f64).exp() * (1.0 + 1e-12));
        assert!(at(21.0) < 1e-9 * p.k);
        let c = quad_config();
        let eq = standing(&c);
        let mut q = eq.q.clone();
        q[5] += 21.0 / c.contact.alpha_k + 0.02;
        let p = c.model.params::<f64>();
        let ext =
            contact_link_forces(&p, &c.contact, &c.end_effectors, &q, &[0.0; 18]).unwrap();
        for f in &ext {
            assert!(f.force.norm() < 1e-9 * c.contact.k);
        }
    }

    #[test]
    fn standing_pose_is_quasi_static() {
        let c = quad_config();
        let eq = standing(&c);
        let x = [eq.q.clone(), vec![0.0; 18]].concat();
        let xd = SystemDynamics::new(c.clone())
            .eval_state(&x, &eq.u)
            .unwrap();
        let norm = xd.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-9, "{norm:e}");
        // About a centimetre of penetration.
        let p = c.model.params::<f64>();
        let foot = crate::kinematics::end_effector_position(&p, &eq.q, 0).unwrap();
        assert!((-foot[2] - 0.01).abs() < 0.002, "{}", foot[2]);
    }

    #[test]
    fn position_rates_vanish_at_rest() {
        let c = quad_config();
        let eq = standing(&c);
        let x = [eq.q.clone(), vec![0.0; 18]].concat();
        let xd = SystemDynamics::new(c)
            .eval_state(&x, &[0.0; 12])
            .unwrap();
        assert!(xd[..18].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn system_jacobian_matches_central_differences() {
        let c = quad_config();
        let sys = SystemDynamics::new(c.clone());
        let mut s = StateSampler::new(34);
        for _ in 0..100 {
            let x = near_ground(&c, &mut s);
            let (_, ad) = forward_jacobian(&sys, &x, None).unwrap();
            let nd = numdiff_jacobian(|x| sys.eval_f64(x), &x, DifferenceScheme::Central).unwrap();
            assert!(rel_diff(&ad, &nd) < 1e-4, "{:e}", rel_diff(&ad, &nd));
        }
    }

    #[test]
    fn system_jacobian_is_continuous() {
        // Entry changes are measured against the Jacobian's magnitude: in
        // stance its entries reach ~1e6 and the second derivatives of the
        // spring term alone exceed 1e5, so an absolute bound is not
        // achievable at this perturbation size.
        let c = quad_config();
        let sys = SystemDynamics::new(c.clone());
        let mut s = StateSampler::new(35);
        for _ in 0..1000 {
            let x = near_ground(&c, &mut s);
            let y: Vec<f64> = x
                .iter()
                .zip(s.uniform(48, -1e-6, 1e-6))
                .map(|(a, b)| a + b)
                .collect();
            let (_, a) = forward_jacobian(&sys, &x, None).unwrap();
            let (_, b) = forward_jacobian(&sys, &y, None).unwrap();
            assert!(rel_diff(&a, &b) < 1e-2, "{:e}", rel_diff(&a, &b));
        }
    }

    #[test]
    fn contact_force_state_gradient_matches_central_differences() {
        let c = quad_config();
        let f = ContactForces::new(c.clone());
        let mut s = StateSampler::new(36);
        for _ in 0..100 {
            let x = near_ground(&c, &mut s)[..36].to_vec();
            let (lambda, ad) = forward_jacobian(&f, &x, None).unwrap();
            assert_eq!(lambda.len(), 12);
            let nd = numdiff_jacobian(|x| f.eval_f64(x), &x, DifferenceScheme::Central).unwrap();
            assert!(rel_diff(&ad, &nd) < 1e-4, "{:e}", rel_diff(&ad, &nd));
        }
    }

    #[test]
    fn guards() {
        let c = quad_config();
        let sys = SystemDynamics::new(c.clone());
        let mut x = vec![0.0; 36];
        x[1] = 1.4;
        assert!(matches!(
            sys.eval_state(&x, &[0.0; 12]),
            Err(Error::SingularOrientation { .. })
        ));
        x[1] = -1.3;
        assert!(sys.eval_state(&x, &[0.0; 12]).is_ok());
        assert!(matches!(
            contact_force_body_frame::<f64>(&c, &x[..18], &x[18..], 4),
            Err(Error::UnknownEndEffector(_))
        ));
        assert!(SystemDynamicsConfig::new(c.model.clone(), c.contact, vec![9]).is_err());
        let bad = ContactModelParams {
            k: -1.0,
            ..Default::default()
        };
        assert!(SystemDynamicsConfig::new(c.model.clone(), bad, vec![0]).is_err());
        assert!(matches!(
            sys.eval_state(&x[..30], &[0.0; 12]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn parameters_parse_from_toml() {
        let p: ContactModelParams = toml::from_str("k = 500.0\nalpha_d = 20.0").unwrap();
        assert_eq!(p.k, 500.0);
        assert_eq!(p.alpha_d, 20.0);
        assert_eq!(p.d, ContactModelParams::default().d);
        assert!(toml::from_str::<ContactModelParams>("stiffness = 1.0").is_err());
    }
}
