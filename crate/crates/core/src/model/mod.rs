//! Kinematic-tree robot descriptions.

mod fixtures;
mod parse;

pub use fixtures::{fixture, fixture_text, FIXTURE_NAMES};
pub use parse::{parse_model, write_model};

use std::fmt;

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::spatial::{Mat3, RigidInertia, SpatialInertia, SpatialTransform, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Floating,
}

impl JointKind {
    pub fn dof(self) -> usize {
        match self {
            JointKind::Floating => 6,
            _ => 1,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
            JointKind::Floating => "floating",
        }
    }
}

impl fmt::Display for JointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Placement of a child frame relative to its parent, kept in the form it
/// was written so that printing and re-parsing is exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    pub xyz: [f64; 3],
    pub rpy: [f64; 3],
}

impl Placement {
    pub const IDENTITY: Placement = Placement {
        xyz: [0.0; 3],
        rpy: [0.0; 3],
    };

    pub fn transform<S: Scalar>(&self) -> SpatialTransform<S> {
        SpatialTransform::from_xyz_rpy(Vec3::from_f64(self.xyz), Vec3::from_f64(self.rpy))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    pub axis: [f64; 3],
    pub placement: Placement,
}

impl Joint {
    pub fn parent_to_joint(&self) -> SpatialTransform<f64> {
        self.placement.transform()
    }
}

/// Inertial parameters as written in the model file: mass, centre of mass
/// in link coordinates, and the inertia tensor about the centre of mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaParams {
    pub mass: f64,
    pub com: [f64; 3],
    /// `ixx, iyy, izz, ixy, ixz, iyz`.
    pub moments: [f64; 6],
}

impl InertiaParams {
    pub fn tensor(&self) -> [[f64; 3]; 3] {
        let [xx, yy, zz, xy, xz, yz] = self.moments;
        [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]]
    }

    pub fn spatial<S: Scalar>(&self) -> SpatialInertia<S> {
        SpatialInertia::new(
            S::from_f64(self.mass),
            Vec3::from_f64(self.com),
            Mat3::from_f64(self.tensor()),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointLimits {
    pub lower: f64,
    pub upper: f64,
    pub velocity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub name: String,
    pub parent: Option<usize>,
    pub joint: Joint,
    pub inertia: InertiaParams,
    pub limits: Option<JointLimits>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EndEffector {
    pub name: String,
    pub link: usize,
    pub placement: Placement,
}

impl EndEffector {
    pub fn offset(&self) -> SpatialTransform<f64> {
        self.placement.transform()
    }
}

/// Generalized-coordinate sizes: positions, velocities, actuated torques.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateDimensions {
    pub nq: usize,
    pub nv: usize,
    pub nu: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub gravity: [f64; 3],
    pub links: Vec<Link>,
    pub end_effectors: Vec<EndEffector>,
    dof_offsets: Vec<usize>,
}

pub const DEFAULT_GRAVITY: [f64; 3] = [0.0, 0.0, -9.81];

impl RobotModel {
    /// Builds and validates a model from its parts.
    pub fn new(
        name: impl Into<String>,
        gravity: [f64; 3],
        links: Vec<Link>,
        end_effectors: Vec<EndEffector>,
    ) -> Result<Self> {
        validate(&links, &end_effectors)?;
        let mut dof_offsets = Vec::with_capacity(links.len());
        let mut offset = 0;
        for link in &links {
            dof_offsets.push(offset);
            offset += link.joint.kind.dof();
        }
        Ok(RobotModel {
            name: name.into(),
            gravity,
            links,
            end_effectors,
            dof_offsets,
        })
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn has_floating_base(&self) -> bool {
        self.links
            .first()
            .is_some_and(|l| l.joint.kind == JointKind::Floating)
    }

    /// Number of joint degrees of freedom (floating base counts six).
    pub fn n_dof(&self) -> usize {
        self.links.iter().map(|l| l.joint.kind.dof()).sum()
    }

    pub fn dimensions(&self) -> StateDimensions {
        let nv = self.n_dof();
        let nu = if self.has_floating_base() { nv - 6 } else { nv };
        StateDimensions { nq: nv, nv, nu }
    }

    /// Index of the first velocity coordinate owned by link `i`.
    pub fn dof_offset(&self, i: usize) -> usize {
        self.dof_offsets[i]
    }

    /// Index of the first actuated velocity coordinate.
    pub fn actuated_offset(&self) -> usize {
        if self.has_floating_base() {
            6
        } else {
            0
        }
    }

    /// Selection matrix `S` (nu x nv) mapping generalized forces to actuated ones.
    pub fn selection_matrix(&self) -> nalgebra::DMatrix<f64> {
        let d = self.dimensions();
        let off = self.actuated_offset();
        let mut s = nalgebra::DMatrix::zeros(d.nu, d.nv);
        for i in 0..d.nu {
            s[(i, off + i)] = 1.0;
        }
        s
    }

    /// `S^T u`: embeds actuated torques into generalized coordinates.
    pub fn apply_selection_transpose<S: Scalar>(&self, u: &[S]) -> Result<Vec<S>> {
        let d = self.dimensions();
        crate::error::check_len("actuated torque", d.nu, u.len())?;
        let mut tau = vec![S::zero(); d.nv];
        tau[self.actuated_offset()..].copy_from_slice(u);
        Ok(tau)
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn end_effector_index(&self, name: &str) -> Result<usize> {
        self.end_effectors
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| Error::UnknownEndEffector(name.to_string()))
    }

    /// True if link `ancestor` lies on the path from the root to `link`.
    pub fn is_ancestor(&self, ancestor: usize, mut link: usize) -> bool {
        loop {
            if link == ancestor {
                return true;
            }
            match self.links[link].parent {
                Some(p) => link = p,
                None => return false,
            }
        }
    }

    /// Parent of each velocity coordinate in the expanded DoF tree. The six
    /// floating-base coordinates form a chain.
    pub fn dof_parents(&self) -> Vec<Option<usize>> {
        let mut parents = Vec::with_capacity(self.n_dof());
        for (i, link) in self.links.iter().enumerate() {
            let base = self.dof_offsets[i];
            let last_of_parent = link
                .parent
                .map(|p| self.dof_offsets[p] + self.links[p].joint.kind.dof() - 1);
            parents.push(last_of_parent);
            for k in 1..link.joint.kind.dof() {
                parents.push(Some(base + k - 1));
            }
        }
        parents
    }

    /// Lifts the numeric parameters into scalar type `S`.
    pub fn params<S: Scalar>(&self) -> ModelParams<'_, S> {
        ModelParams {
            model: self,
            links: self
                .links
                .iter()
                .map(|l| LinkParams {
                    axis: Vec3::from_f64(l.joint.axis),
                    tree: l.joint.placement.transform(),
                    inertia: l.inertia.spatial::<S>().to_rigid(),
                })
                .collect(),
            gravity: Vec3::from_f64(self.gravity),
        }
    }
}

/// Per-link numeric data in scalar type `S`.
#[derive(Clone, Debug)]
pub struct LinkParams<S> {
    pub axis: Vec3<S>,
    pub tree: SpatialTransform<S>,
    pub inertia: RigidInertia<S>,
}

/// A model's numeric parameters lifted into a scalar backend. Topology comes
/// from the borrowed [`RobotModel`]; inertias may be overridden so that
/// derivatives with respect to them can be taken.
#[derive(Clone, Debug)]
pub struct ModelParams<'a, S> {
    pub model: &'a RobotModel,
    pub links: Vec<LinkParams<S>>,
    pub gravity: Vec3<S>,
}

impl<S: Scalar> ModelParams<'_, S> {
    pub fn set_inertia(&mut self, link: usize, inertia: SpatialInertia<S>) {
        self.links[link].inertia = inertia.to_rigid();
    }
}

fn validate(links: &[Link], end_effectors: &[EndEffector]) -> Result<()> {
    let invalid = |msg: String| Err(Error::Validation(msg));
    if links.is_empty() {
        return invalid("model has no links".into());
    }
    for (i, link) in links.iter().enumerate() {
        if links[..i].iter().any(|l| l.name == link.name) {
            return invalid(format!("duplicate link name '{}'", link.name));
        }
        if let Some(p) = link.parent {
            if p >= i {
                return invalid(format!("link '{}' appears before its parent", link.name));
            }
        }
        let j = &link.joint;
        match j.kind {
            JointKind::Floating => {
                if i != 0 || link.parent.is_some() {
                    return invalid(format!(
                        "floating joint of '{}' is not at the tree root",
                        link.name
                    ));
                }
                if j.placement != Placement::IDENTITY {
                    return invalid(format!(
                        "floating joint of '{}' must have zero xyz and rpy",
                        link.name
                    ));
                }
            }
            _ => {
                let n = j.axis.iter().map(|a| a * a).sum::<f64>().sqrt();
                if (n - 1.0).abs() > 1e-12 {
                    return invalid(format!(
                        "axis of '{}' is not a unit vector (norm {n})",
                        link.name
                    ));
                }
            }
        }
        if link.parent.is_none() && i > 0 && links[0].joint.kind == JointKind::Floating {
            return invalid(format!(
                "link '{}' is a second root beside the floating base",
                link.name
            ));
        }
        validate_inertia(&link.name, &link.inertia)?;
        if let Some(l) = link.limits {
            if l.lower > l.upper || l.velocity < 0.0 {
                return invalid(format!("inconsistent limits on '{}'", link.name));
            }
        }
    }
    for (i, ee) in end_effectors.iter().enumerate() {
        if end_effectors[..i].iter().any(|e| e.name == ee.name) {
            return invalid(format!("duplicate end-effector name '{}'", ee.name));
        }
        if ee.link >= links.len() {
            return invalid(format!(
                "end-effector '{}' refers to a missing link",
                ee.name
            ));
        }
    }
    Ok(())
}

fn validate_inertia(name: &str, p: &InertiaParams) -> Result<()> {
    let invalid = |msg: String| Err(Error::Validation(msg));
    if !(p.mass > 0.0 && p.mass.is_finite()) {
        return invalid(format!("link '{name}' has non-positive mass {}", p.mass));
    }
    if p.com.iter().chain(p.moments.iter()).any(|v| !v.is_finite()) {
        return invalid(format!("link '{name}' has non-finite inertia"));
    }
    let t = nalgebra::Matrix3::from_fn(|i, j| p.tensor()[i][j]);
    let eig = t.symmetric_eigen().eigenvalues;
    let (a, b, c) = (eig[0], eig[1], eig[2]);
    if a.min(b).min(c) <= 0.0 {
        return invalid(format!("inertia of link '{name}' is not positive definite"));
    }
    let slack = 1e-12 * (a + b + c);
    if a + b < c - slack || a + c < b - slack || b + c < a - slack {
        return invalid(format!(
            "inertia of link '{name}' violates the triangle inequality"
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_dimensions() {
        let dims = |n: &str| fixture(n).unwrap().dimensions();
        assert_eq!(
            dims("pendulum"),
            StateDimensions {
                nq: 1,
                nv: 1,
                nu: 1
            }
        );
        assert_eq!(
            dims("double_pendulum"),
            StateDimensions {
                nq: 2,
                nv: 2,
                nu: 2
            }
        );
        assert_eq!(
            dims("arm6"),
            StateDimensions {
                nq: 6,
                nv: 6,
                nu: 6
            }
        );
        assert_eq!(
            dims("quad18"),
            StateDimensions {
                nq: 18,
                nv: 18,
                nu: 12
            }
        );
        assert_eq!(fixture("quad18").unwrap().n_dof(), 18);
    }

    #[test]
    fn selection_matrix_shapes() {
        let m = fixture("quad18").unwrap();
        let s = m.selection_matrix();
        assert_eq!(s.shape(), (12, 18));
        assert_eq!(s.columns(0, 6).amax(), 0.0);
        assert_eq!(s.columns(6, 12), nalgebra::DMatrix::identity(12, 12));
        let p = fixture("pendulum").unwrap();
        assert_eq!(p.selection_matrix(), nalgebra::DMatrix::identity(1, 1));
    }

    #[test]
    fn dof_parents_chain_the_base() {
        let m = fixture("quad18").unwrap();
        let p = m.dof_parents();
        assert_eq!(
            &p[..7],
            &[None, Some(0), Some(1), Some(2), Some(3), Some(4), Some(5)]
        );
        assert_eq!(p[7], Some(6));
        assert_eq!(p[9], Some(5));
    }

    #[test]
    fn arm_reach_is_about_two_and_a_half_metres() {
        let m = fixture("arm6").unwrap();
        let mut reach = 0.0;
        for l in &m.links[1..] {
            reach += l
                .joint
                .placement
                .xyz
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
        }
        let ee = &m.end_effectors[0].placement.xyz;
        reach += ee.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((2.3..2.7).contains(&reach), "reach {reach}");
    }
}
