//! Seeded random states in documented ranges.
//!
//! Joint positions are uniform inside the model's limits when given and in
//! `[-pi, pi]` otherwise. Floating-base Euler angles use `[-pi, pi]` for roll
//! and yaw and `[-1.2, 1.2]` for pitch, base position `[-1, 1]`. Velocities
//! are uniform in `[-2, 2]`; accelerations and torques in `[-5, 5]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{JointKind, RobotModel};

pub const DEFAULT_SEED: u64 = 42;
pub const PITCH_LIMIT: f64 = 1.2;

pub struct StateSampler {
    rng: ChaCha8Rng,
}

impl StateSampler {
    pub fn new(seed: u64) -> Self {
        StateSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.rng.random_range(lo..hi)).collect()
    }

    pub fn position(&mut self, model: &RobotModel) -> Vec<f64> {
        use std::f64::consts::PI;
        let mut q = Vec::with_capacity(model.n_dof());
        for link in &model.links {
            match link.joint.kind {
                JointKind::Floating => {
                    q.push(self.rng.random_range(-PI..PI));
                    q.push(self.rng.random_range(-PITCH_LIMIT..PITCH_LIMIT));
                    q.push(self.rng.random_range(-PI..PI));
                    for _ in 0..3 {
                        q.push(self.rng.random_range(-1.0..1.0));
                    }
                }
                _ => {
                    let (lo, hi) = link.limits.map_or((-PI, PI), |l| (l.lower, l.upper));
                    q.push(self.rng.random_range(lo..hi));
                }
            }
        }
        q
    }

    pub fn velocity(&mut self, model: &RobotModel) -> Vec<f64> {
        self.uniform(model.n_dof(), -2.0, 2.0)
    }

    pub fn acceleration(&mut self, model: &RobotModel) -> Vec<f64> {
        self.uniform(model.n_dof(), -5.0, 5.0)
    }

    /// Actuated torques.
    pub fn torque(&mut self, model: &RobotModel) -> Vec<f64> {
        self.uniform(model.dimensions().nu, -5.0, 5.0)
    }
}
