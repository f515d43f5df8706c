//! Seeded benchmark inputs.

use rbdad::model::RobotModel;
use rbdad::sampling::StateSampler;

/// Fixtures benchmarked, from smallest to largest.
pub const BENCH_FIXTURES: [&str; 3] = ["double_pendulum", "arm6", "quad18"];

/// `[q, qd, tau]` at a seeded random state.
pub fn fd_input(model: &RobotModel, seed: u64) -> Vec<f64> {
    let mut s = StateSampler::new(seed);
    [s.position(model), s.velocity(model), s.torque(model)].concat()
}

/// `[q, qd, qdd]` at a seeded random state.
pub fn id_input(model: &RobotModel, seed: u64) -> Vec<f64> {
    let mut s = StateSampler::new(seed);
    [s.position(model), s.velocity(model), s.acceleration(model)].concat()
}
