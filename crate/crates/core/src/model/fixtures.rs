//! Models shipped with the crate.

use super::{parse_model, RobotModel};
use crate::error::{Error, Result};

/// Fixtures exercised by the dynamics and derivative test suites.
pub const FIXTURE_NAMES: [&str; 4] = ["pendulum", "double_pendulum", "arm6", "quad18"];

pub fn fixture_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "pendulum" => include_str!("../../fixtures/models/pendulum.model"),
        "double_pendulum" => include_str!("../../fixtures/models/double_pendulum.model"),
        "arm6" => include_str!("../../fixtures/models/arm6.model"),
        "quad18" => include_str!("../../fixtures/models/quad18.model"),
        "double_integrator" => include_str!("../../fixtures/models/double_integrator.model"),
        _ => return None,
    })
}

pub fn fixture(name: &str) -> Result<RobotModel> {
    let text =
        fixture_text(name).ok_or_else(|| Error::Config(format!("no fixture named '{name}'")))?;
    parse_model(text)
}
