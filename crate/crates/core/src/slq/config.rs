//! TOML problem files.
//!
//! ```toml
//! model = "double_pendulum"     # fixture name, or a model file relative to this file
//! horizon = 2.0                 # s
//! dt = 0.01                     # s
//!
//! [contact]                     # optional; enables the soft contact model
//! feet = ["lf_foot"]            # optional, defaults to every end-effector
//! [contact.params]              # optional, same fields as the contact parameters
//! d = 50.0
//!
//! [initial_state]               # one of: values = [...], standing = [joints...]
//! values = [0.0, 0.0, 0.0, 0.0]
//! [final_state]                 # as above, or offsets = [[index, delta], ...] from the initial state
//! offsets = [[0, 1.0]]
//! [nominal_state]               # optional, defaults to the initial state
//!
//! [cost]                        # weights: scalar, full diagonal, or { default, entries = [[i, w]] }
//! q = 0.0
//! r = 0.01
//! q_final = { default = 10.0, entries = [[0, 1000.0]] }
//! nominal_input = "zero"        # zero | gravity_compensation | standing | [values...]
//!
//! [controller]                  # optional joint PD about the initial state
//! kp = 0.0
//! kd = 0.0
//!
//! [solver]                      # optional
//! max_iterations = 50
//! tolerance = 1e-6
//! ```
//!
//! Standing joint lists shorter than the actuated joint count are repeated,
//! so one leg's angles describe every leg.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use super::{AffineController, CostWeights, SlqProblem, SlqSettings};
use crate::contact::{
    standing_equilibrium, ContactModelParams, SystemDynamics, SystemDynamicsConfig,
};
use crate::error::{Error, Result};
use crate::model::{fixture_text, parse_model, RobotModel};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    model: String,
    horizon: f64,
    dt: f64,
    contact: Option<RawContact>,
    initial_state: StateSpec,
    final_state: StateSpec,
    nominal_state: Option<StateSpec>,
    cost: RawCost,
    #[serde(default)]
    controller: RawController,
    #[serde(default)]
    solver: RawSolver,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContact {
    feet: Option<Vec<String>>,
    #[serde(default)]
    params: ContactModelParams,
}

#[derive(Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum StateSpec {
    Values { values: Vec<f64> },
    Standing { standing: Vec<f64> },
    Offsets { offsets: Vec<(usize, f64)> },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum WeightSpec {
    Uniform(f64),
    Diagonal(Vec<f64>),
    Entries {
        default: f64,
        #[serde(default)]
        entries: Vec<(usize, f64)>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum NamedInput {
    Zero,
    GravityCompensation,
    Standing,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum InputSpec {
    Named(NamedInput),
    Values(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    q: WeightSpec,
    r: WeightSpec,
    q_final: WeightSpec,
    nominal_input: InputSpec,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawController {
    kp: f64,
    kd: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSolver {
    max_iterations: usize,
    tolerance: f64,
}

impl Default for RawSolver {
    fn default() -> Self {
        let s = SlqSettings::default();
        RawSolver {
            max_iterations: s.max_iterations,
            tolerance: s.tolerance,
        }
    }
}

/// A parsed problem together with the solver settings it asks for.
#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub problem: SlqProblem,
    pub settings: SlqSettings,
    /// Joint torques holding the standing pose, when the file uses one.
    pub standing_input: Option<DVector<f64>>,
}

/// Reads a problem file; model paths resolve relative to its directory.
pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text, path.parent())
}

/// Parses problem text. `base_dir` resolves model file paths.
pub fn parse_problem(text: &str, base_dir: Option<&Path>) -> Result<ProblemFile> {
    let raw: RawProblem = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let model = Arc::new(load_model(&raw.model, base_dir)?);
    let dims = model.dimensions();
    let (nx, nu) = (dims.nq + dims.nv, dims.nu);

    let config = match &raw.contact {
        Some(c) => Some(match &c.feet {
            Some(names) => SystemDynamicsConfig::from_names(model.clone(), c.params, names)?,
            None => SystemDynamicsConfig::all_feet(model.clone(), c.params)?,
        }),
        None => None,
    };

    let mut standing_input = None;
    let mut resolve = |spec: &StateSpec, initial: Option<&DVector<f64>>| -> Result<DVector<f64>> {
        match spec {
            StateSpec::Values { values } => {
                if values.len() != nx {
                    return Err(Error::Config(format!(
                        "state has {} values, expected {nx}",
                        values.len()
                    )));
                }
                Ok(DVector::from_column_slice(values))
            }
            StateSpec::Standing { standing } => {
                let config = config.as_ref().ok_or_else(|| {
                    Error::Config("standing state needs a [contact] section".into())
                })?;
                let joints = tile(standing, nu)?;
                let eq = standing_equilibrium(config, &joints)?;
                standing_input = Some(DVector::from_vec(eq.u));
                let mut x = eq.q;
                x.resize(nx, 0.0);
                Ok(DVector::from_vec(x))
            }
            StateSpec::Offsets { offsets } => {
                let mut x = initial
                    .ok_or_else(|| {
                        Error::Config("the initial state cannot be given as offsets".into())
                    })?
                    .clone();
                for &(i, delta) in offsets {
                    if i >= nx {
                        return Err(Error::Config(format!(
                            "state index {i} out of range for {nx} states"
                        )));
                    }
                    x[i] += delta;
                }
                Ok(x)
            }
        }
    };
    let x0 = resolve(&raw.initial_state, None)?;
    let x_final = resolve(&raw.final_state, Some(&x0))?;
    let x_nominal = match &raw.nominal_state {
        Some(spec) => resolve(spec, Some(&x0))?,
        None => x0.clone(),
    };

    let u_nominal = match &raw.cost.nominal_input {
        InputSpec::Named(NamedInput::Zero) => DVector::zeros(nu),
        InputSpec::Named(NamedInput::GravityCompensation) => {
            if model.has_floating_base() {
                return Err(Error::Config(
                    "gravity compensation needs a fixed-base model".into(),
                ));
            }
            let p = model.params::<f64>();
            let zero = vec![0.0; dims.nv];
            DVector::from_vec(crate::dynamics::rnea(
                &p,
                &x0.as_slice()[..dims.nq],
                &zero,
                &zero,
                None,
            )?)
        }
        InputSpec::Named(NamedInput::Standing) => standing_input
            .clone()
            .ok_or_else(|| Error::Config("standing input needs a standing initial state".into()))?,
        InputSpec::Values(v) => {
            if v.len() != nu {
                return Err(Error::Config(format!(
                    "nominal input has {} values, expected {nu}",
                    v.len()
                )));
            }
            DVector::from_column_slice(v)
        }
    };

    let cost = CostWeights {
        q: weights(&raw.cost.q, nx, "q")?,
        r: weights(&raw.cost.r, nu, "r")?,
        q_final: weights(&raw.cost.q_final, nx, "q_final")?,
        x_nominal,
        x_final,
        u_nominal: u_nominal.clone(),
    };

    let mut gain = DMatrix::zeros(nu, nx);
    let offset = model.actuated_offset();
    for j in 0..nu {
        gain[(j, offset + j)] = -raw.controller.kp;
        gain[(j, dims.nq + offset + j)] = -raw.controller.kd;
    }

    let dynamics = match config {
        Some(c) => SystemDynamics::new(c),
        None => SystemDynamics::free(model),
    };
    let mut problem = SlqProblem {
        dynamics,
        cost,
        x0: x0.clone(),
        horizon: raw.horizon,
        dt: raw.dt,
        initial_controller: AffineController::constant(
            0,
            u_nominal.clone(),
            gain.clone(),
            x0.clone(),
        ),
    };
    let steps = problem.steps()?;
    problem.initial_controller = AffineController::constant(steps, u_nominal, gain, x0);
    problem.validate()?;
    let settings = SlqSettings {
        max_iterations: raw.solver.max_iterations,
        tolerance: raw.solver.tolerance,
        ..SlqSettings::default()
    };
    Ok(ProblemFile {
        problem,
        settings,
        standing_input,
    })
}

fn load_model(name: &str, base_dir: Option<&Path>) -> Result<RobotModel> {
    if let Some(text) = fixture_text(name) {
        return parse_model(text);
    }
    let path = match base_dir {
        Some(dir) => dir.join(name),
        None => name.into(),
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("model '{}': {e}", path.display())))?;
    parse_model(&text)
}

fn tile(values: &[f64], n: usize) -> Result<Vec<f64>> {
    if values.is_empty() || !n.is_multiple_of(values.len()) {
        return Err(Error::Config(format!(
            "{} standing joint values do not tile {n} joints",
            values.len()
        )));
    }
    Ok(values.iter().copied().cycle().take(n).collect())
}

fn weights(spec: &WeightSpec, n: usize, what: &str) -> Result<DMatrix<f64>> {
    let diag = match spec {
        WeightSpec::Uniform(w) => vec![*w; n],
        WeightSpec::Diagonal(v) => {
            if v.len() != n {
                return Err(Error::Config(format!(
                    "{what} has {} weights, expected {n}",
                    v.len()
                )));
            }
            v.clone()
        }
        WeightSpec::Entries { default, entries } => {
            let mut d = vec![*default; n];
            for &(i, w) in entries {
                if i >= n {
                    return Err(Error::Config(format!(
                        "{what} index {i} out of range for {n}"
                    )));
                }
                d[i] = w;
            }
            d
        }
    };
    if diag.iter().any(|w| !w.is_finite()) {
        return Err(Error::Config(format!("{what} weights must be finite")));
    }
    Ok(DMatrix::from_diagonal(&DVector::from_vec(diag)))
}

/// Problem files shipped with the crate.
pub const PROBLEM_NAMES: [&str; 3] = ["double_integrator", "two_link_reach", "quad18_forward"];

pub fn problem_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "double_integrator" => include_str!("../../fixtures/problems/double_integrator.toml"),
        "two_link_reach" => include_str!("../../fixtures/problems/two_link_reach.toml"),
        "quad18_forward" => include_str!("../../fixtures/problems/quad18_forward.toml"),
        _ => return None,
    })
}

pub fn problem_fixture(name: &str) -> Result<ProblemFile> {
    let text =
        problem_text(name).ok_or_else(|| Error::Config(format!("no problem named '{name}'")))?;
    parse_problem(text, None)
}
