//! Six-dimensional spatial algebra (motion and force vectors, Plücker
//! transforms, rigid-body and articulated inertias).
//!
//! Vectors are stored angular-first. A [`SpatialTransform`] from frame A to
//! frame B keeps the rotation `E` (A coordinates to B coordinates) and the
//! position `r` of B's origin in A coordinates; the 6x6 Plücker matrix is
//! never formed.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::autodiff::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3<S>(pub [S; 3]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<S>(pub [[S; 3]; 3]);

impl<S: Scalar> Vec3<S> {
    #[inline]
    pub fn new(x: S, y: S, z: S) -> Self {
        Vec3([x, y, z])
    }

    #[inline]
    pub fn zero() -> Self {
        Vec3([S::zero(); 3])
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Vec3(v.map(S::from_f64))
    }

    pub fn value(&self) -> [f64; 3] {
        self.0.map(|v| v.value())
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> S {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn cross(&self, o: &Self) -> Self {
        let [a0, a1, a2] = self.0;
        let [b0, b1, b2] = o.0;
        Vec3([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])
    }

    #[inline]
    pub fn scale(&self, s: S) -> Self {
        Vec3(self.0.map(|v| v * s))
    }

    pub fn norm(&self) -> S {
        self.dot(self).sqrt()
    }

    /// Skew-symmetric matrix `[v]x` with `[v]x * w = v x w`.
    pub fn skew(&self) -> Mat3<S> {
        let [x, y, z] = self.0;
        let o = S::zero();
        Mat3([[o, -z, y], [z, o, -x], [-y, x, o]])
    }
}

impl<S: Scalar> Index<usize> for Vec3<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

impl<S: Scalar> IndexMut<usize> for Vec3<S> {
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.0[i]
    }
}

impl<S: Scalar> Add for Vec3<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<S: Scalar> Sub for Vec3<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<S: Scalar> Neg for Vec3<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Vec3(self.0.map(|v| -v))
    }
}

impl<S: Scalar> AddAssign for Vec3<S> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<S: Scalar> SubAssign for Vec3<S> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<S: Scalar> Mat3<S> {
    pub fn identity() -> Self {
        let (o, l) = (S::zero(), S::one());
        Mat3([[l, o, o], [o, l, o], [o, o, l]])
    }

    pub fn zero() -> Self {
        Mat3([[S::zero(); 3]; 3])
    }

    pub fn from_f64(m: [[f64; 3]; 3]) -> Self {
        Mat3(m.map(|r| r.map(S::from_f64)))
    }

    pub fn value(&self) -> [[f64; 3]; 3] {
        self.0.map(|r| r.map(|v| v.value()))
    }

    pub fn diagonal(d: [S; 3]) -> Self {
        let o = S::zero();
        Mat3([[d[0], o, o], [o, d[1], o], [o, o, d[2]]])
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec3<S>) -> Vec3<S> {
        let m = &self.0;
        let [x, y, z] = v.0;
        Vec3([
            m[0][0] * x + m[0][1] * y + m[0][2] * z,
            m[1][0] * x + m[1][1] * y + m[1][2] * z,
            m[2][0] * x + m[2][1] * y + m[2][2] * z,
        ])
    }

    /// `self^T * v`.
    #[inline]
    pub fn tmul_vec(&self, v: &Vec3<S>) -> Vec3<S> {
        let m = &self.0;
        let [x, y, z] = v.0;
        Vec3([
            m[0][0] * x + m[1][0] * y + m[2][0] * z,
            m[0][1] * x + m[1][1] * y + m[2][1] * z,
            m[0][2] * x + m[1][2] * y + m[2][2] * z,
        ])
    }

    #[inline]
    pub fn mul_mat(&self, o: &Self) -> Self {
        let a = &self.0;
        let b = &o.0;
        let mut out = [[S::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Mat3(out)
    }

    pub fn scale(&self, s: S) -> Self {
        Mat3(self.0.map(|r| r.map(|v| v * s)))
    }

    /// Rotation matrix about a unit `axis` by `angle` (Rodrigues).
    pub fn axis_angle(axis: &Vec3<S>, angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        let k = axis.skew();
        let k2 = k.mul_mat(&k);
        Mat3::identity() + k.scale(s) + k2.scale(S::one() - c)
    }

    pub fn rot_x(angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, l) = (S::zero(), S::one());
        Mat3([[l, o, o], [o, c, -s], [o, s, c]])
    }

    pub fn rot_y(angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, l) = (S::zero(), S::one());
        Mat3([[c, o, s], [o, l, o], [-s, o, c]])
    }

    pub fn rot_z(angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, l) = (S::zero(), S::one());
        Mat3([[c, -s, o], [s, c, o], [o, o, l]])
    }

    /// Fixed-axis roll-pitch-yaw: `Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn from_rpy(roll: S, pitch: S, yaw: S) -> Self {
        Mat3::rot_z(yaw)
            .mul_mat(&Mat3::rot_y(pitch))
            .mul_mat(&Mat3::rot_x(roll))
    }

    /// Intrinsic X-Y-Z Euler angles: `Rx(a) * Ry(b) * Rz(c)`.
    pub fn from_euler_xyz(a: S, b: S, c: S) -> Self {
        Mat3::rot_x(a)
            .mul_mat(&Mat3::rot_y(b))
            .mul_mat(&Mat3::rot_z(c))
    }
}

impl<S: Scalar> Add for Mat3<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self.0;
        for (r, orow) in out.iter_mut().zip(o.0.iter()) {
            for (v, ov) in r.iter_mut().zip(orow.iter()) {
                *v += *ov;
            }
        }
        Mat3(out)
    }
}

impl<S: Scalar> Sub for Mat3<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut out = self.0;
        for (r, orow) in out.iter_mut().zip(o.0.iter()) {
            for (v, ov) in r.iter_mut().zip(orow.iter()) {
                *v -= *ov;
            }
        }
        Mat3(out)
    }
}

impl<S: Scalar> Mul for Mat3<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.mul_mat(&o)
    }
}

/// Spatial motion vector (velocity or acceleration).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionVector<S> {
    pub angular: Vec3<S>,
    pub linear: Vec3<S>,
}

/// Spatial force vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceVector<S> {
    pub torque: Vec3<S>,
    pub force: Vec3<S>,
}

impl<S: Scalar> MotionVector<S> {
    pub fn new(angular: Vec3<S>, linear: Vec3<S>) -> Self {
        MotionVector { angular, linear }
    }

    pub fn zero() -> Self {
        MotionVector {
            angular: Vec3::zero(),
            linear: Vec3::zero(),
        }
    }

    pub fn from_array(v: [S; 6]) -> Self {
        MotionVector {
            angular: Vec3([v[0], v[1], v[2]]),
            linear: Vec3([v[3], v[4], v[5]]),
        }
    }

    pub fn to_array(&self) -> [S; 6] {
        let (a, l) = (self.angular.0, self.linear.0);
        [a[0], a[1], a[2], l[0], l[1], l[2]]
    }

    pub fn scale(&self, s: S) -> Self {
        MotionVector {
            angular: self.angular.scale(s),
            linear: self.linear.scale(s),
        }
    }

    /// Power pairing `<m, f>`.
    pub fn dot(&self, f: &ForceVector<S>) -> S {
        self.angular.dot(&f.torque) + self.linear.dot(&f.force)
    }

    /// Motion cross product `self x m`.
    pub fn cross_motion(&self, m: &MotionVector<S>) -> MotionVector<S> {
        MotionVector {
            angular: self.angular.cross(&m.angular),
            linear: self.angular.cross(&m.linear) + self.linear.cross(&m.angular),
        }
    }

    /// Force cross product `self x* f`.
    pub fn cross_force(&self, f: &ForceVector<S>) -> ForceVector<S> {
        ForceVector {
            torque: self.angular.cross(&f.torque) + self.linear.cross(&f.force),
            force: self.angular.cross(&f.force),
        }
    }
}

impl<S: Scalar> Add for MotionVector<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        MotionVector {
            angular: self.angular + o.angular,
            linear: self.linear + o.linear,
        }
    }
}

impl<S: Scalar> Sub for MotionVector<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        MotionVector {
            angular: self.angular - o.angular,
            linear: self.linear - o.linear,
        }
    }
}

impl<S: Scalar> Neg for MotionVector<S> {
    type Output = Self;
    fn neg(self) -> Self {
        MotionVector {
            angular: -self.angular,
            linear: -self.linear,
        }
    }
}

impl<S: Scalar> ForceVector<S> {
    pub fn new(torque: Vec3<S>, force: Vec3<S>) -> Self {
        ForceVector { torque, force }
    }

    pub fn zero() -> Self {
        ForceVector {
            torque: Vec3::zero(),
            force: Vec3::zero(),
        }
    }

    pub fn from_array(v: [S; 6]) -> Self {
        ForceVector {
            torque: Vec3([v[0], v[1], v[2]]),
            force: Vec3([v[3], v[4], v[5]]),
        }
    }

    pub fn to_array(&self) -> [S; 6] {
        let (t, f) = (self.torque.0, self.force.0);
        [t[0], t[1], t[2], f[0], f[1], f[2]]
    }

    pub fn scale(&self, s: S) -> Self {
        ForceVector {
            torque: self.torque.scale(s),
            force: self.force.scale(s),
        }
    }
}

impl<S: Scalar> Add for ForceVector<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        ForceVector {
            torque: self.torque + o.torque,
            force: self.force + o.force,
        }
    }
}

impl<S: Scalar> Sub for ForceVector<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        ForceVector {
            torque: self.torque - o.torque,
            force: self.force - o.force,
        }
    }
}

impl<S: Scalar> Neg for ForceVector<S> {
    type Output = Self;
    fn neg(self) -> Self {
        ForceVector {
            torque: -self.torque,
            force: -self.force,
        }
    }
}

impl<S: Scalar> AddAssign for ForceVector<S> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<S: Scalar> SubAssign for ForceVector<S> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

/// Plücker coordinate transform between two frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialTransform<S> {
    pub rotation: Mat3<S>,
    pub translation: Vec3<S>,
}

impl<S: Scalar> SpatialTransform<S> {
    pub fn new(rotation: Mat3<S>, translation: Vec3<S>) -> Self {
        SpatialTransform {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        SpatialTransform {
            rotation: Mat3::identity(),
            translation: Vec3::zero(),
        }
    }

    pub fn from_rotation(rotation: Mat3<S>) -> Self {
        SpatialTransform {
            rotation,
            translation: Vec3::zero(),
        }
    }

    pub fn from_translation(translation: Vec3<S>) -> Self {
        SpatialTransform {
            rotation: Mat3::identity(),
            translation,
        }
    }

    /// Transform placing a child frame at `xyz` with orientation `rpy`
    /// inside its parent frame.
    pub fn from_xyz_rpy(xyz: Vec3<S>, rpy: Vec3<S>) -> Self {
        let r = Mat3::from_rpy(rpy[0], rpy[1], rpy[2]);
        SpatialTransform {
            rotation: r.transpose(),
            translation: xyz,
        }
    }

    pub fn transform_motion(&self, m: &MotionVector<S>) -> MotionVector<S> {
        let e = &self.rotation;
        let v = m.linear - self.translation.cross(&m.angular);
        MotionVector {
            angular: e.mul_vec(&m.angular),
            linear: e.mul_vec(&v),
        }
    }

    pub fn transform_force(&self, f: &ForceVector<S>) -> ForceVector<S> {
        let e = &self.rotation;
        let n = f.torque - self.translation.cross(&f.force);
        ForceVector {
            torque: e.mul_vec(&n),
            force: e.mul_vec(&f.force),
        }
    }

    /// Applies the inverse transform to a motion vector.
    pub fn inv_transform_motion(&self, m: &MotionVector<S>) -> MotionVector<S> {
        let e = &self.rotation;
        let w = e.tmul_vec(&m.angular);
        let v = e.tmul_vec(&m.linear) + self.translation.cross(&w);
        MotionVector {
            angular: w,
            linear: v,
        }
    }

    /// Applies `X^T` to a force vector, mapping it back to the source frame.
    pub fn inv_transform_force(&self, f: &ForceVector<S>) -> ForceVector<S> {
        let e = &self.rotation;
        let force = e.tmul_vec(&f.force);
        let torque = e.tmul_vec(&f.torque) + self.translation.cross(&force);
        ForceVector { torque, force }
    }

    pub fn inverse(&self) -> Self {
        SpatialTransform {
            rotation: self.rotation.transpose(),
            translation: -self.rotation.mul_vec(&self.translation),
        }
    }

    /// `self * inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &Self) -> Self {
        SpatialTransform {
            rotation: self.rotation.mul_mat(&inner.rotation),
            translation: inner.translation + inner.rotation.tmul_vec(&self.translation),
        }
    }

    /// Expresses an articulated inertia given in the target frame in the
    /// source frame (`X^T I X`).
    pub fn inv_transform_articulated(&self, ia: &ArticulatedInertia<S>) -> ArticulatedInertia<S> {
        let e = &self.rotation;
        let et = e.transpose();
        let a = et.mul_mat(&ia.a).mul_mat(e);
        let b = et.mul_mat(&ia.b).mul_mat(e);
        let c = et.mul_mat(&ia.c).mul_mat(e);
        let rx = self.translation.skew();
        let rx_bt = rx.mul_mat(&b.transpose());
        let rx_c = rx.mul_mat(&c);
        let a = a + rx_bt + rx_bt.transpose() - rx_c.mul_mat(&rx);
        let b = b + rx_c;
        ArticulatedInertia { a, b, c }
    }

    /// Expresses a rigid-body inertia given in the target frame in the
    /// source frame.
    pub fn inv_transform_rigid(&self, ri: &RigidInertia<S>) -> RigidInertia<S> {
        let e = &self.rotation;
        let rho = e.mul_vec(&self.translation);
        let rx = rho.skew();
        let hx = ri.h.skew();
        let h_plus = (ri.h + rho.scale(ri.mass)).skew();
        let inner = ri.ibar - rx.mul_mat(&hx) - h_plus.mul_mat(&rx);
        RigidInertia {
            mass: ri.mass,
            h: e.tmul_vec(&ri.h) + self.translation.scale(ri.mass),
            ibar: e.transpose().mul_mat(&inner).mul_mat(e),
        }
    }
}

/// User-facing inertial parameters: mass, centre of mass and the rotational
/// inertia about the centre of mass, all in link-frame coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialInertia<S> {
    pub mass: S,
    pub com: Vec3<S>,
    pub rotational_inertia: Mat3<S>,
}

impl<S: Scalar> SpatialInertia<S> {
    pub fn new(mass: S, com: Vec3<S>, rotational_inertia: Mat3<S>) -> Self {
        SpatialInertia {
            mass,
            com,
            rotational_inertia,
        }
    }

    pub fn point_mass(mass: S, com: Vec3<S>) -> Self {
        SpatialInertia {
            mass,
            com,
            rotational_inertia: Mat3::zero(),
        }
    }

    /// Mass, first moment and rotational inertia about the frame origin.
    pub fn to_rigid(&self) -> RigidInertia<S> {
        let cx = self.com.skew();
        RigidInertia {
            mass: self.mass,
            h: self.com.scale(self.mass),
            ibar: self.rotational_inertia - cx.mul_mat(&cx).scale(self.mass),
        }
    }

    pub fn apply(&self, m: &MotionVector<S>) -> ForceVector<S> {
        self.to_rigid().apply(m)
    }
}

/// Rigid-body inertia in the division-free form used by the recursions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidInertia<S> {
    pub mass: S,
    pub h: Vec3<S>,
    pub ibar: Mat3<S>,
}

impl<S: Scalar> RigidInertia<S> {
    pub fn zero() -> Self {
        RigidInertia {
            mass: S::zero(),
            h: Vec3::zero(),
            ibar: Mat3::zero(),
        }
    }

    pub fn apply(&self, m: &MotionVector<S>) -> ForceVector<S> {
        ForceVector {
            torque: self.ibar.mul_vec(&m.angular) + self.h.cross(&m.linear),
            force: m.linear.scale(self.mass) - self.h.cross(&m.angular),
        }
    }

    pub fn to_articulated(&self) -> ArticulatedInertia<S> {
        let hx = self.h.skew();
        ArticulatedInertia {
            a: self.ibar,
            b: hx,
            c: Mat3::identity().scale(self.mass),
        }
    }
}

impl<S: Scalar> Add for RigidInertia<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        RigidInertia {
            mass: self.mass + o.mass,
            h: self.h + o.h,
            ibar: self.ibar + o.ibar,
        }
    }
}

/// Symmetric 6x6 inertia `[[a, b], [b^T, c]]` in 3x3 blocks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArticulatedInertia<S> {
    pub a: Mat3<S>,
    pub b: Mat3<S>,
    pub c: Mat3<S>,
}

impl<S: Scalar> ArticulatedInertia<S> {
    pub fn apply(&self, m: &MotionVector<S>) -> ForceVector<S> {
        ForceVector {
            torque: self.a.mul_vec(&m.angular) + self.b.mul_vec(&m.linear),
            force: self.b.tmul_vec(&m.angular) + self.c.mul_vec(&m.linear),
        }
    }

    /// Subtracts the symmetric rank-one term `u u^T / d`.
    pub fn sub_rank_one(&self, u: &ForceVector<S>, inv_d: S) -> Self {
        let outer = |x: &Vec3<S>, y: &Vec3<S>| {
            let mut m = [[S::zero(); 3]; 3];
            for (i, row) in m.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    *cell = x[i] * y[j] * inv_d;
                }
            }
            Mat3(m)
        };
        ArticulatedInertia {
            a: self.a - outer(&u.torque, &u.torque),
            b: self.b - outer(&u.torque, &u.force),
            c: self.c - outer(&u.force, &u.force),
        }
    }

    pub fn to_dense(&self) -> [[S; 6]; 6] {
        let mut out = [[S::zero(); 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.a.0[i][j];
                out[i][j + 3] = self.b.0[i][j];
                out[i + 3][j] = self.b.0[j][i];
                out[i + 3][j + 3] = self.c.0[i][j];
            }
        }
        out
    }
}

impl<S: Scalar> Add for ArticulatedInertia<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        ArticulatedInertia {
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c,
        }
    }
}

impl<S: Scalar> AddAssign for ArticulatedInertia<S> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plucker_motion(x: &SpatialTransform<f64>) -> [[f64; 6]; 6] {
        let e = x.rotation.0;
        let rx = x.translation.skew().0;
        let mut out = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = e[i][j];
                out[i + 3][j + 3] = e[i][j];
                let mut s = 0.0;
                for k in 0..3 {
                    s += e[i][k] * rx[k][j];
                }
                out[i + 3][j] = -s;
            }
        }
        out
    }

    fn dense_rigid(ri: &RigidInertia<f64>) -> [[f64; 6]; 6] {
        let hx = ri.h.skew().0;
        let mut out = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = ri.ibar.0[i][j];
                out[i][j + 3] = hx[i][j];
                out[i + 3][j] = -hx[i][j];
                out[i + 3][j + 3] = if i == j { ri.mass } else { 0.0 };
            }
        }
        out
    }

    fn matvec(m: &[[f64; 6]; 6], v: &[f64; 6]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for i in 0..6 {
            out[i] = (0..6).map(|j| m[i][j] * v[j]).sum();
        }
        out
    }

    fn matmul(a: &[[f64; 6]; 6], b: &[[f64; 6]; 6]) -> [[f64; 6]; 6] {
        let mut out = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                out[i][j] = (0..6).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        out
    }

    fn transpose6(a: &[[f64; 6]; 6]) -> [[f64; 6]; 6] {
        let mut out = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                out[i][j] = a[j][i];
            }
        }
        out
    }

    fn transform(r: [f64; 3], t: [f64; 3]) -> SpatialTransform<f64> {
        SpatialTransform::from_xyz_rpy(Vec3(t), Vec3(r))
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn identity_leaves_vectors_unchanged() {
        let x = SpatialTransform::<f64>::identity();
        let m = MotionVector::from_array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let f = ForceVector::from_array([-1.0, 0.5, 2.0, 3.0, -4.0, 1.0]);
        assert_eq!(x.transform_motion(&m), m);
        assert_eq!(x.transform_force(&f), f);
    }

    #[test]
    fn rotation_about_z_permutes_axes() {
        let x = SpatialTransform::from_rotation(Mat3::rot_z(std::f64::consts::FRAC_PI_2));
        let m = MotionVector::new(Vec3([1.0, 0.0, 0.0]), Vec3::zero());
        let out = x.transform_motion(&m).to_array();
        assert!(close(&out, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn translation_couples_force_into_torque() {
        let x = SpatialTransform::from_translation(Vec3([0.0, 0.0, 1.0]));
        let f = ForceVector::new(Vec3::zero(), Vec3([1.0, 0.0, 0.0]));
        let out = x.transform_force(&f);
        assert_eq!(out.torque.0, [0.0, -1.0, 0.0]);
        assert_eq!(out.force.0, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn point_mass_obeys_newton() {
        let i = SpatialInertia::point_mass(1.0, Vec3::zero());
        let f = i.apply(&MotionVector::new(Vec3::zero(), Vec3([1.0, 0.0, 0.0])));
        assert_eq!(f.force.0, [1.0, 0.0, 0.0]);
        assert_eq!(f.torque.0, [0.0, 0.0, 0.0]);
        let zero = i.apply(&MotionVector::zero());
        assert_eq!(zero, ForceVector::zero());
    }

    fn arb_vec() -> impl Strategy<Value = [f64; 3]> {
        proptest::array::uniform3(-2.0f64..2.0)
    }

    fn arb6() -> impl Strategy<Value = [f64; 6]> {
        proptest::array::uniform6(-2.0f64..2.0)
    }

    proptest! {
        #[test]
        fn motion_transform_matches_dense_plucker(r in arb_vec(), t in arb_vec(), m in arb6()) {
            let x = transform(r, t);
            let dense = matvec(&plucker_motion(&x), &m);
            let fast = x.transform_motion(&MotionVector::from_array(m)).to_array();
            prop_assert!(close(&dense, &fast, 1e-12));
        }

        #[test]
        fn force_transform_preserves_power(r in arb_vec(), t in arb_vec(), m in arb6(), f in arb6()) {
            let x = transform(r, t);
            let m = MotionVector::from_array(m);
            let f = ForceVector::from_array(f);
            let lhs = x.transform_motion(&m).dot(&f);
            let rhs = m.dot(&x.inverse().transform_force(&f));
            prop_assert!((lhs - rhs).abs() < 1e-12);
            // Simultaneous transform of both halves keeps the pairing too.
            let both = x.transform_motion(&m).dot(&x.transform_force(&f));
            prop_assert!((both - m.dot(&f)).abs() < 1e-12);
        }

        #[test]
        fn composition_matches_sequential(r1 in arb_vec(), t1 in arb_vec(), r2 in arb_vec(), t2 in arb_vec(), m in arb6()) {
            let x1 = transform(r1, t1);
            let x2 = transform(r2, t2);
            let m = MotionVector::from_array(m);
            let seq = x2.transform_motion(&x1.transform_motion(&m)).to_array();
            let comp = x2.compose(&x1).transform_motion(&m).to_array();
            prop_assert!(close(&seq, &comp, 1e-12));
        }

        #[test]
        fn inverse_helpers_match_inverse(r in arb_vec(), t in arb_vec(), m in arb6(), f in arb6()) {
            let x = transform(r, t);
            let inv = x.inverse();
            let m = MotionVector::from_array(m);
            let f = ForceVector::from_array(f);
            prop_assert!(close(&x.inv_transform_motion(&m).to_array(), &inv.transform_motion(&m).to_array(), 1e-12));
            // X^T f equals the inverse transform's force action.
            prop_assert!(close(&x.inv_transform_force(&f).to_array(), &inv.transform_force(&f).to_array(), 1e-12));
        }

        #[test]
        fn inertia_apply_matches_dense(m in 0.1f64..5.0, c in arb_vec(), d in proptest::array::uniform3(0.1f64..1.0), v in arb6()) {
            let i = SpatialInertia::new(m, Vec3(c), Mat3::diagonal(d));
            let ri = i.to_rigid();
            let dense = matvec(&dense_rigid(&ri), &v);
            let fast = i.apply(&MotionVector::from_array(v)).to_array();
            prop_assert!(close(&dense, &fast, 1e-12));
        }

        #[test]
        fn congruence_matches_dense(r in arb_vec(), t in arb_vec(), m in 0.1f64..5.0, c in arb_vec(), d in proptest::array::uniform3(0.1f64..1.0)) {
            let x = transform(r, t);
            let ri = SpatialInertia::new(m, Vec3(c), Mat3::diagonal(d)).to_rigid();
            let xm = plucker_motion(&x);
            let expected = matmul(&transpose6(&xm), &matmul(&dense_rigid(&ri), &xm));
            let art = x.inv_transform_articulated(&ri.to_articulated()).to_dense();
            let rig = dense_rigid(&x.inv_transform_rigid(&ri));
            for i in 0..6 {
                prop_assert!(close(&expected[i], &art[i], 1e-11));
                prop_assert!(close(&expected[i], &rig[i], 1e-11));
            }
        }
    }

    #[test]
    fn dual_backend_matches_float_bitwise() {
        use crate::autodiff::Dual;
        let x = transform([0.3, -0.7, 1.1], [0.2, 0.5, -0.4]);
        let m = MotionVector::from_array([0.1, -0.2, 0.3, 0.7, 0.4, -1.5]);
        let lift = |v: f64| Dual::<f64, 2>::constant(v);
        let xd = SpatialTransform {
            rotation: Mat3(x.rotation.0.map(|r| r.map(lift))),
            translation: Vec3(x.translation.0.map(lift)),
        };
        let md = MotionVector::from_array(m.to_array().map(lift));
        let a = x.transform_motion(&m).to_array();
        let b = xd.transform_motion(&md).to_array().map(|d| d.re);
        assert_eq!(a, b);
    }
}
