//! Derivatives of the dynamics maps through interchangeable providers:
//! finite differences, runtime forward and reverse AD, and compiled
//! straight-line programs. The torque Jacobian of forward dynamics also has
//! an analytic reference.

mod analytic;
mod functions;
mod numdiff;

pub use analytic::{analytic_torque_jacobian, mass_matrix_derivative, AnalyticMethod};
pub use functions::{
    ContactSetup, FloatingBaseInverseDynamics, ForwardDynamics, InverseDynamics, Kinematics,
    MassMatrix, INERTIAL_PARAMETERS_PER_LINK,
};
pub use numdiff::{numdiff_jacobian, DifferenceScheme};

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::autodiff::{forward_jacobian, record_function, Tape, VectorFunction};
use crate::compile::{compile_jacobian, DerivativeProgram, JacobianMode, OptimizationConfig};
use crate::error::{check_len, Error, Result};
use crate::model::RobotModel;
use crate::sampling::StateSampler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DerivativeProvider {
    NumDiff,
    ForwardAD,
    ReverseAD,
    CompiledAD,
    AnalyticReference,
}

impl DerivativeProvider {
    pub const ALL: [DerivativeProvider; 5] = [
        DerivativeProvider::NumDiff,
        DerivativeProvider::ForwardAD,
        DerivativeProvider::ReverseAD,
        DerivativeProvider::CompiledAD,
        DerivativeProvider::AnalyticReference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DerivativeProvider::NumDiff => "numdiff",
            DerivativeProvider::ForwardAD => "forward_ad",
            DerivativeProvider::ReverseAD => "reverse_ad",
            DerivativeProvider::CompiledAD => "compiled_ad",
            DerivativeProvider::AnalyticReference => "analytic",
        }
    }
}

impl std::fmt::Display for DerivativeProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Jacobians of forward dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearizedDynamics {
    /// `d qdd / d q`, `nv x nq`.
    pub a_q: DMatrix<f64>,
    /// `d qdd / d qd`, `nv x nv`.
    pub a_qd: DMatrix<f64>,
    /// `d qdd / d u`, `nv x nu`.
    pub b: DMatrix<f64>,
}

/// Jacobians of inverse dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseDynamicsDerivatives {
    pub d_q: DMatrix<f64>,
    pub d_qd: DMatrix<f64>,
    pub d_qdd: DMatrix<f64>,
}

/// A function together with its tape and compiled Jacobian programs.
/// Everything is built at construction and read-only afterwards.
#[derive(Debug)]
pub struct DerivativeEngine<F> {
    function: F,
    tape: Tape,
    forward: DerivativeProgram,
    reverse: DerivativeProgram,
}

impl<F: VectorFunction> DerivativeEngine<F> {
    /// Records `function` at `probe` and compiles both Jacobian modes.
    pub fn new(function: F, probe: &[f64], config: &OptimizationConfig) -> Result<Self> {
        let tape = record_function(&function, probe)?;
        if tape.branch_comparisons() != 0 {
            return Err(Error::Record(format!(
                "{} value-dependent comparisons recorded; the tape would not generalize",
                tape.branch_comparisons()
            )));
        }
        let forward = compile_jacobian(&tape, JacobianMode::Forward, None, config)?;
        let reverse = compile_jacobian(&tape, JacobianMode::Reverse, None, config)?;
        Ok(DerivativeEngine {
            function,
            tape,
            forward,
            reverse,
        })
    }

    pub fn function(&self) -> &F {
        &self.function
    }

    /// The point the tape was recorded at.
    pub fn probe(&self) -> Vec<f64> {
        self.tape.nodes()[..self.tape.n_inputs()]
            .iter()
            .map(|n| n.value)
            .collect()
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    pub fn compiled(&self, mode: JacobianMode) -> &DerivativeProgram {
        match mode {
            JacobianMode::Forward => &self.forward,
            JacobianMode::Reverse => &self.reverse,
        }
    }

    /// The compiled mode with fewer instructions.
    pub fn preferred_mode(&self) -> JacobianMode {
        if self.reverse.n_instructions() < self.forward.n_instructions() {
            JacobianMode::Reverse
        } else {
            JacobianMode::Forward
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.function.n_inputs()
    }

    pub fn n_outputs(&self) -> usize {
        self.function.n_outputs()
    }

    pub fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.function.eval_f64(x)
    }

    /// Function value and full Jacobian.
    pub fn jacobian(
        &self,
        x: &[f64],
        provider: DerivativeProvider,
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        check_len("jacobian input", self.n_inputs(), x.len())?;
        match provider {
            DerivativeProvider::NumDiff => {
                let y = self.value(x)?;
                let j = numdiff_jacobian(|x| self.value(x), x, DifferenceScheme::SingleSided)?;
                Ok((y, j))
            }
            DerivativeProvider::ForwardAD => forward_jacobian(&self.function, x, None),
            DerivativeProvider::ReverseAD => self.tape.reverse_jacobian(x),
            DerivativeProvider::CompiledAD => self.compiled(self.preferred_mode()).eval(x),
            DerivativeProvider::AnalyticReference => Err(Error::Unsupported {
                provider: provider.name(),
                what: "a general Jacobian",
            }),
        }
    }

    /// Jacobian through a specific compiled mode.
    pub fn compiled_jacobian(
        &self,
        x: &[f64],
        mode: JacobianMode,
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        self.compiled(mode).eval(x)
    }

    /// Central-difference Jacobian, for test oracles.
    pub fn central_jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        numdiff_jacobian(|x| self.value(x), x, DifferenceScheme::Central)
    }
}

/// Column blocks `[0, a)`, `[a, a + b)`, `[a + b, ..)` of `j`.
fn split3(j: &DMatrix<f64>, a: usize, b: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let c = j.ncols() - a - b;
    (
        j.columns(0, a).into_owned(),
        j.columns(a, b).into_owned(),
        j.columns(a + b, c).into_owned(),
    )
}

/// The random non-singular state every tape is recorded at.
fn probe_state(model: &RobotModel, seed: u64, last: usize) -> Vec<f64> {
    let mut s = StateSampler::new(seed);
    let mut x = s.position(model);
    x.extend(s.velocity(model));
    x.extend(s.uniform(last, -5.0, 5.0));
    x
}

/// Derivative engines for every dynamics map of one model.
#[derive(Debug)]
pub struct RobotDerivatives {
    model: Arc<RobotModel>,
    fd: DerivativeEngine<ForwardDynamics>,
    id: DerivativeEngine<InverseDynamics>,
    fbid: Option<DerivativeEngine<FloatingBaseInverseDynamics>>,
    kinematics: Option<DerivativeEngine<Kinematics>>,
}

impl RobotDerivatives {
    pub fn new(model: Arc<RobotModel>, config: &OptimizationConfig, seed: u64) -> Result<Self> {
        Self::build(model, None, config, seed)
    }

    /// As [`RobotDerivatives::new`], with contact forces inside the
    /// forward and inverse dynamics maps.
    pub fn with_contact(
        model: Arc<RobotModel>,
        contact: ContactSetup,
        config: &OptimizationConfig,
        seed: u64,
    ) -> Result<Self> {
        Self::build(model, Some(contact), config, seed)
    }

    fn build(
        model: Arc<RobotModel>,
        contact: Option<ContactSetup>,
        config: &OptimizationConfig,
        seed: u64,
    ) -> Result<Self> {
        let d = model.dimensions();
        let fd_fn = match &contact {
            Some(c) => ForwardDynamics::with_contact(model.clone(), c.clone())?,
            None => ForwardDynamics::new(model.clone()),
        };
        let fd = DerivativeEngine::new(fd_fn, &probe_state(&model, seed, d.nu), config)?;
        let mut id_fn = InverseDynamics::new(model.clone());
        if let Some(c) = &contact {
            id_fn = id_fn.with_contact(c.clone());
        }
        let id = DerivativeEngine::new(id_fn, &probe_state(&model, seed, d.nv), config)?;
        let fbid = if model.has_floating_base() {
            let mut f = FloatingBaseInverseDynamics::new(model.clone())?;
            if let Some(c) = &contact {
                f = f.with_contact(c.clone());
            }
            Some(DerivativeEngine::new(
                f,
                &probe_state(&model, seed, d.nu),
                config,
            )?)
        } else {
            None
        };
        let kinematics = if model.end_effectors.is_empty() {
            None
        } else {
            Some(DerivativeEngine::new(
                Kinematics::new(model.clone())?,
                &probe_state(&model, seed, 0),
                config,
            )?)
        };
        Ok(RobotDerivatives {
            model,
            fd,
            id,
            fbid,
            kinematics,
        })
    }

    pub fn model(&self) -> &Arc<RobotModel> {
        &self.model
    }

    pub fn forward_dynamics(&self) -> &DerivativeEngine<ForwardDynamics> {
        &self.fd
    }

    pub fn inverse_dynamics(&self) -> &DerivativeEngine<InverseDynamics> {
        &self.id
    }

    pub fn floating_base_inverse_dynamics(
        &self,
    ) -> Result<&DerivativeEngine<FloatingBaseInverseDynamics>> {
        self.fbid.as_ref().ok_or(Error::NotFloatingBase)
    }

    pub fn kinematics(&self) -> Result<&DerivativeEngine<Kinematics>> {
        self.kinematics.as_ref().ok_or_else(|| {
            Error::Validation(format!("model `{}` has no end-effectors", self.model.name))
        })
    }

    /// Jacobians of `qdd = fd(q, qd, u)`.
    pub fn fd_derivatives(
        &self,
        q: &[f64],
        qd: &[f64],
        u: &[f64],
        provider: DerivativeProvider,
    ) -> Result<LinearizedDynamics> {
        let d = self.model.dimensions();
        check_len("q", d.nq, q.len())?;
        check_len("qd", d.nv, qd.len())?;
        check_len("u", d.nu, u.len())?;
        if provider == DerivativeProvider::AnalyticReference {
            return Err(Error::Unsupported {
                provider: provider.name(),
                what: "the state blocks of forward dynamics",
            });
        }
        let x = [q, qd, u].concat();
        let (_, j) = self.fd.jacobian(&x, provider)?;
        let (a_q, a_qd, b) = split3(&j, d.nq, d.nv);
        Ok(LinearizedDynamics { a_q, a_qd, b })
    }

    /// `d qdd / d u`. The analytic reference solves with the `L^T L`
    /// factor and ignores contact, which does not depend on `u`.
    pub fn fd_torque_jacobian(
        &self,
        q: &[f64],
        qd: &[f64],
        u: &[f64],
        provider: DerivativeProvider,
    ) -> Result<DMatrix<f64>> {
        match provider {
            DerivativeProvider::AnalyticReference => {
                analytic_torque_jacobian(&self.model, q, AnalyticMethod::LtL)
            }
            _ => Ok(self.fd_derivatives(q, qd, u, provider)?.b),
        }
    }

    /// Jacobians of `tau = id(q, qd, qdd)` over all coordinates.
    pub fn id_derivatives(
        &self,
        q: &[f64],
        qd: &[f64],
        qdd: &[f64],
        provider: DerivativeProvider,
    ) -> Result<InverseDynamicsDerivatives> {
        let nv = self.model.dimensions().nv;
        check_len("q", nv, q.len())?;
        check_len("qd", nv, qd.len())?;
        check_len("qdd", nv, qdd.len())?;
        if provider == DerivativeProvider::AnalyticReference {
            return Err(Error::Unsupported {
                provider: provider.name(),
                what: "inverse dynamics derivatives",
            });
        }
        let (_, j) = self.id.jacobian(&[q, qd, qdd].concat(), provider)?;
        let (d_q, d_qd, d_qdd) = split3(&j, nv, nv);
        Ok(InverseDynamicsDerivatives { d_q, d_qd, d_qdd })
    }

    /// Jacobians of the underactuated inverse dynamics `tau_a(q, qd, qdd_a)`.
    pub fn floating_base_id_derivatives(
        &self,
        q: &[f64],
        qd: &[f64],
        qdd_a: &[f64],
        provider: DerivativeProvider,
    ) -> Result<InverseDynamicsDerivatives> {
        let engine = self.floating_base_inverse_dynamics()?;
        let d = self.model.dimensions();
        check_len("q", d.nq, q.len())?;
        check_len("qd", d.nv, qd.len())?;
        check_len("qdd_a", d.nu, qdd_a.len())?;
        if provider == DerivativeProvider::AnalyticReference {
            return Err(Error::Unsupported {
                provider: provider.name(),
                what: "inverse dynamics derivatives",
            });
        }
        let (_, j) = engine.jacobian(&[q, qd, qdd_a].concat(), provider)?;
        let (d_q, d_qd, d_qdd) = split3(&j, d.nq, d.nv);
        Ok(InverseDynamicsDerivatives { d_q, d_qd, d_qdd })
    }

    /// `d(p, pdot) / d(q, qd)` stacked over all end-effectors.
    pub fn kinematics_derivatives(
        &self,
        q: &[f64],
        qd: &[f64],
        provider: DerivativeProvider,
    ) -> Result<DMatrix<f64>> {
        let engine = self.kinematics()?;
        let d = self.model.dimensions();
        check_len("q", d.nq, q.len())?;
        check_len("qd", d.nv, qd.len())?;
        if provider == DerivativeProvider::AnalyticReference {
            return Err(Error::Unsupported {
                provider: provider.name(),
                what: "kinematics derivatives",
            });
        }
        Ok(engine.jacobian(&[q, qd].concat(), provider)?.1)
    }
}

#[cfg(test)]
mod tests;
