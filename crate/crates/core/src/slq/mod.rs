//! Sequential linear-quadratic optimal control.
//!
//! Each iteration rolls the system out under the current affine feedback
//! controller with RK4, linearizes the discrete dynamics along the rollout,
//! solves the LQ subproblem with a Riccati backward pass and updates the
//! controller by a backtracking line search on the true cost.

mod config;
mod riccati;

pub use config::{
    load_problem, parse_problem, problem_fixture, problem_text, ProblemFile, PROBLEM_NAMES,
};
pub use riccati::{riccati_backward_pass, CostApproximation, LqApproximation, RiccatiGains};

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::compile::OptimizationConfig;
use crate::contact::SystemDynamics;
use crate::deriv::{DerivativeEngine, DerivativeProvider};
use crate::error::{check_len, Error, Result};

/// States with a larger Euclidean norm count as a diverged rollout.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Quadratic tracking cost
/// `sum_t dt (|x_t - x_nom|_Q^2 + |u_t - u_nom|_R^2) / 2 + |x_N - x_f|_Qf^2 / 2`.
#[derive(Clone, Debug)]
pub struct CostWeights {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub q_final: DMatrix<f64>,
    pub x_nominal: DVector<f64>,
    pub x_final: DVector<f64>,
    pub u_nominal: DVector<f64>,
}

impl CostWeights {
    fn stage(&self, x: &DVector<f64>, u: &DVector<f64>, dt: f64) -> f64 {
        let dx = x - &self.x_nominal;
        let du = u - &self.u_nominal;
        0.5 * dt * (dx.dot(&(&self.q * &dx)) + du.dot(&(&self.r * &du)))
    }

    fn terminal(&self, x: &DVector<f64>) -> f64 {
        let dx = x - &self.x_final;
        0.5 * dx.dot(&(&self.q_final * &dx))
    }

    fn validate(&self, nx: usize, nu: usize) -> Result<()> {
        let square = |m: &DMatrix<f64>, n: usize, what: &'static str| {
            check_len(what, n, m.nrows())?;
            check_len(what, n, m.ncols())?;
            if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                return Err(Error::Config(format!("{what} is not symmetric")));
            }
            Ok(())
        };
        square(&self.q, nx, "state weight")?;
        square(&self.q_final, nx, "final weight")?;
        square(&self.r, nu, "input weight")?;
        check_len("nominal state", nx, self.x_nominal.len())?;
        check_len("final state", nx, self.x_final.len())?;
        check_len("nominal input", nu, self.u_nominal.len())?;
        let min_eig = |m: &DMatrix<f64>| m.clone().symmetric_eigen().eigenvalues.min();
        if min_eig(&self.q) < -1e-12 || min_eig(&self.q_final) < -1e-12 {
            return Err(Error::Config(
                "state weights must be positive semidefinite".into(),
            ));
        }
        if min_eig(&self.r) <= 0.0 {
            return Err(Error::Config(
                "input weight must be positive definite".into(),
            ));
        }
        Ok(())
    }
}

/// Affine feedback `u_t = u_ff,t + K_t (x - x_ref,t)`.
#[derive(Clone, Debug)]
pub struct AffineController {
    pub feedforward: Vec<DVector<f64>>,
    pub gains: Vec<DMatrix<f64>>,
    pub reference: Vec<DVector<f64>>,
}

impl AffineController {
    /// The same feedback law at every step.
    pub fn constant(
        steps: usize,
        u: DVector<f64>,
        gain: DMatrix<f64>,
        reference: DVector<f64>,
    ) -> Self {
        AffineController {
            feedforward: vec![u; steps],
            gains: vec![gain; steps],
            reference: vec![reference; steps],
        }
    }

    pub fn steps(&self) -> usize {
        self.feedforward.len()
    }

    /// Input at step `t` and state `x`.
    pub fn input(&self, t: usize, x: &DVector<f64>) -> DVector<f64> {
        &self.feedforward[t] + &self.gains[t] * (x - &self.reference[t])
    }
}

#[derive(Clone, Debug)]
pub struct SlqProblem {
    pub dynamics: SystemDynamics,
    pub cost: CostWeights,
    pub x0: DVector<f64>,
    /// Horizon (s).
    pub horizon: f64,
    /// Step (s).
    pub dt: f64,
    pub initial_controller: AffineController,
}

impl SlqProblem {
    pub fn n_state(&self) -> usize {
        self.dynamics.n_state()
    }

    pub fn n_control(&self) -> usize {
        self.dynamics.n_control()
    }

    /// Number of control steps, `T / dt`.
    pub fn steps(&self) -> Result<usize> {
        let n = self.horizon / self.dt;
        let rounded = n.round();
        if !(self.dt > 0.0 && rounded >= 1.0 && (n - rounded).abs() < 1e-9 * n.max(1.0)) {
            return Err(Error::Config(format!(
                "horizon {} is not a positive multiple of dt {}",
                self.horizon, self.dt
            )));
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<usize> {
        let steps = self.steps()?;
        let (nx, nu) = (self.n_state(), self.n_control());
        self.cost.validate(nx, nu)?;
        check_len("initial state", nx, self.x0.len())?;
        let c = &self.initial_controller;
        check_len("initial controller steps", steps, c.steps())?;
        for t in 0..steps {
            check_len("controller feedforward", nu, c.feedforward[t].len())?;
            check_len("controller gain rows", nu, c.gains[t].nrows())?;
            check_len("controller gain columns", nx, c.gains[t].ncols())?;
            check_len("controller reference", nx, c.reference[t].len())?;
        }
        Ok(steps)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SlqSettings {
    pub max_iterations: usize,
    /// Stop once an accepted step improves the cost by less than this
    /// relative amount.
    pub tolerance: f64,
    pub backtracking: f64,
    pub min_step: f64,
    /// Worker threads for the linearization; 0 means all available cores.
    pub threads: usize,
    pub mu_max: f64,
}

impl Default for SlqSettings {
    fn default() -> Self {
        SlqSettings {
            max_iterations: 50,
            tolerance: 1e-6,
            backtracking: 0.5,
            min_step: 1e-4,
            threads: 0,
            mu_max: 1e10,
        }
    }
}

/// Wall time spent in each stage of one iteration.
#[derive(Clone, Copy, Debug, Default)]
pub struct IterationTiming {
    pub linearization: Duration,
    pub backward_pass: Duration,
    pub line_search: Duration,
}

impl IterationTiming {
    pub fn total(&self) -> Duration {
        self.linearization + self.backward_pass + self.line_search
    }
}

#[derive(Clone, Debug)]
pub struct SlqSolution {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub gains: Vec<DMatrix<f64>>,
    pub feedforward: Vec<DVector<f64>>,
    /// Cost of the initial rollout followed by every accepted iterate.
    pub cost_history: Vec<f64>,
    pub timings: Vec<IterationTiming>,
    /// Line-search step accepted in each iteration.
    pub step_sizes: Vec<f64>,
    pub converged: bool,
    pub total_time: Duration,
}

impl SlqSolution {
    pub fn iterations(&self) -> usize {
        self.timings.len()
    }

    pub fn final_cost(&self) -> f64 {
        *self.cost_history.last().unwrap_or(&f64::NAN)
    }
}

#[derive(Clone, Debug)]
struct Trajectory {
    states: Vec<DVector<f64>>,
    inputs: Vec<DVector<f64>>,
    cost: f64,
}

/// SLQ over one problem, holding the compiled derivative programs of its
/// dynamics.
pub struct SlqSolver {
    problem: SlqProblem,
    steps: usize,
    engine: DerivativeEngine<SystemDynamics>,
    compile_time: Duration,
}

impl SlqSolver {
    pub fn new(problem: SlqProblem, config: &OptimizationConfig) -> Result<Self> {
        let steps = problem.validate()?;
        let u0 = problem.initial_controller.input(0, &problem.x0);
        let probe: Vec<f64> = problem.x0.iter().chain(u0.iter()).copied().collect();
        let start = Instant::now();
        let engine = DerivativeEngine::new(problem.dynamics.clone(), &probe, config)?;
        Ok(SlqSolver {
            problem,
            steps,
            engine,
            compile_time: start.elapsed(),
        })
    }

    pub fn problem(&self) -> &SlqProblem {
        &self.problem
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn engine(&self) -> &DerivativeEngine<SystemDynamics> {
        &self.engine
    }

    /// Time spent recording and compiling the derivative programs.
    pub fn compile_time(&self) -> Duration {
        self.compile_time
    }

    fn dynamics(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(
            self.problem
                .dynamics
                .eval_state(x.as_slice(), u.as_slice())?,
        ))
    }

    /// One RK4 step with the input held constant.
    pub fn rk4_step(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        rk4(|x| self.dynamics(x, u), x, self.problem.dt)
    }

    /// Simulates `controller` from the initial state.
    fn rollout(&self, controller: &AffineController) -> Result<Trajectory> {
        let cost = &self.problem.cost;
        let dt = self.problem.dt;
        let mut x = self.problem.x0.clone();
        let mut states = Vec::with_capacity(self.steps + 1);
        let mut inputs = Vec::with_capacity(self.steps);
        let mut total = 0.0;
        for t in 0..self.steps {
            let u = controller.input(t, &x);
            total += cost.stage(&x, &u, dt);
            let next = self.rk4_step(&x, &u)?;
            states.push(x);
            inputs.push(u);
            let norm = next.norm();
            if norm.is_nan() || norm > DIVERGENCE_BOUND {
                return Err(Error::DivergedRollout { step: t + 1, norm });
            }
            x = next;
        }
        total += cost.terminal(&x);
        states.push(x);
        Ok(Trajectory {
            states,
            inputs,
            cost: total,
        })
    }

    /// Cost of rolling out `controller`.
    pub fn rollout_cost(&self, controller: &AffineController) -> Result<f64> {
        Ok(self.rollout(controller)?.cost)
    }

    /// Continuous Jacobian `[df/dx, df/du]` and value at `(x, u)`.
    fn continuous(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        provider: DerivativeProvider,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let input: Vec<f64> = x.iter().chain(u.iter()).copied().collect();
        let (y, j) = self.engine.jacobian(&input, provider)?;
        Ok((DVector::from_vec(y), j))
    }

    /// Discrete `(A, B)` of the RK4 step at `(x, u)` from the continuous
    /// Jacobians at the four stages.
    pub fn discrete_jacobians(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        provider: DerivativeProvider,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (nx, nu) = (self.problem.n_state(), self.problem.n_control());
        let dt = self.problem.dt;
        let eye = DMatrix::<f64>::identity(nx, nx);
        let (k1, j1) = self.continuous(x, u, provider)?;
        let split = |j: &DMatrix<f64>| {
            (
                j.columns(0, nx).into_owned(),
                j.columns(nx, nu).into_owned(),
            )
        };
        let (f1x, f1u) = split(&j1);
        let (k2, j2) = self.continuous(&(x + &k1 * (0.5 * dt)), u, provider)?;
        let (f2x, f2u) = split(&j2);
        let (k3, j3) = self.continuous(&(x + &k2 * (0.5 * dt)), u, provider)?;
        let (f3x, f3u) = split(&j3);
        let (_, j4) = self.continuous(&(x + &k3 * dt), u, provider)?;
        let (f4x, f4u) = split(&j4);

        let s1x = f1x;
        let s1u = f1u;
        let s2x = &f2x * (&eye + &s1x * (0.5 * dt));
        let s2u = &f2x * &s1u * (0.5 * dt) + f2u;
        let s3x = &f3x * (&eye + &s2x * (0.5 * dt));
        let s3u = &f3x * &s2u * (0.5 * dt) + f3u;
        let s4x = &f4x * (&eye + &s3x * dt);
        let s4u = &f4x * &s3u * dt + f4u;
        let a = &eye + (s1x + &s2x * 2.0 + &s3x * 2.0 + s4x) * (dt / 6.0);
        let b = (s1u + &s2u * 2.0 + &s3u * 2.0 + s4u) * (dt / 6.0);
        Ok((a, b))
    }

    /// `(A_t, B_t)` along a trajectory, computed in parallel across steps.
    pub fn linearize_along(
        &self,
        states: &[DVector<f64>],
        inputs: &[DVector<f64>],
        provider: DerivativeProvider,
        threads: usize,
    ) -> Result<LqApproximation> {
        let n = inputs.len();
        check_len("trajectory states", n + 1, states.len())?;
        let threads = match threads {
            0 => std::thread::available_parallelism().map_or(1, |t| t.get()),
            t => t,
        }
        .clamp(1, n.max(1));
        let chunk = n.div_ceil(threads).max(1);
        let mut results: Vec<Result<(DMatrix<f64>, DMatrix<f64>)>> = Vec::with_capacity(n);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..n)
                .step_by(chunk)
                .map(|start| {
                    let end = (start + chunk).min(n);
                    scope.spawn(move || {
                        (start..end)
                            .map(|t| self.discrete_jacobians(&states[t], &inputs[t], provider))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                results.extend(h.join().expect("linearization worker panicked"));
            }
        });
        let mut lq = LqApproximation {
            a: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
        };
        for r in results {
            let (a, b) = r?;
            lq.a.push(a);
            lq.b.push(b);
        }
        Ok(lq)
    }

    fn cost_model(&self, traj: &Trajectory) -> CostApproximation {
        let c = &self.problem.cost;
        let dt = self.problem.dt;
        let n = traj.inputs.len();
        let (nx, nu) = (self.problem.n_state(), self.problem.n_control());
        let q_xx = &c.q * dt;
        let r_uu = &c.r * dt;
        CostApproximation {
            q: traj.states[..n]
                .iter()
                .map(|x| &q_xx * (x - &c.x_nominal))
                .collect(),
            r: traj
                .inputs
                .iter()
                .map(|u| &r_uu * (u - &c.u_nominal))
                .collect(),
            q_xx: vec![q_xx.clone(); n],
            r_uu: vec![r_uu.clone(); n],
            p_ux: vec![DMatrix::zeros(nu, nx); n],
            final_x: &c.q_final * (&traj.states[n] - &c.x_final),
            final_xx: c.q_final.clone(),
        }
    }

    /// Runs SLQ with derivatives from `provider`.
    pub fn solve(
        &self,
        provider: DerivativeProvider,
        settings: &SlqSettings,
    ) -> Result<SlqSolution> {
        let start = Instant::now();
        let mut traj = self.rollout(&self.problem.initial_controller)?;
        let mut history = vec![traj.cost];
        let mut timings = Vec::new();
        let mut step_sizes = Vec::new();
        let mut gains = self.problem.initial_controller.gains.clone();
        let mut feedforward = vec![DVector::zeros(self.problem.n_control()); self.steps];
        let mut mu = 0.0;
        let mut converged = false;

        for _ in 0..settings.max_iterations {
            let mut timing = IterationTiming::default();
            let t0 = Instant::now();
            let lq =
                self.linearize_along(&traj.states, &traj.inputs, provider, settings.threads)?;
            timing.linearization = t0.elapsed();

            let t1 = Instant::now();
            let cost_model = self.cost_model(&traj);
            let riccati = loop {
                match riccati_backward_pass(&lq, &cost_model, mu) {
                    Ok(r) => break r,
                    Err(e) => {
                        mu = (mu * 10.0).max(1e-6);
                        if mu > settings.mu_max {
                            return Err(e);
                        }
                    }
                }
            };
            timing.backward_pass = t1.elapsed();

            let t2 = Instant::now();
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha >= settings.min_step {
                let candidate = AffineController {
                    feedforward: traj
                        .inputs
                        .iter()
                        .zip(&riccati.feedforward)
                        .map(|(u, k)| u + k * alpha)
                        .collect(),
                    gains: riccati.gains.clone(),
                    reference: traj.states[..self.steps].to_vec(),
                };
                // Diverging or singular trial rollouts are rejected steps.
                if let Ok(next) = self.rollout(&candidate) {
                    if next.cost.is_finite() && next.cost < traj.cost {
                        accepted = Some(next);
                        break;
                    }
                }
                alpha *= settings.backtracking;
            }
            timing.line_search = t2.elapsed();
            timings.push(timing);

            let Some(next) = accepted else {
                // No step improves the cost: the current iterate is a
                // local optimum up to the line-search resolution.
                step_sizes.push(0.0);
                converged = true;
                break;
            };
            let improvement = (traj.cost - next.cost) / traj.cost.abs().max(1e-300);
            gains = riccati.gains;
            feedforward = riccati.feedforward.iter().map(|k| k * alpha).collect();
            traj = next;
            history.push(traj.cost);
            step_sizes.push(alpha);
            mu /= 5.0;
            if mu < 1e-9 {
                mu = 0.0;
            }
            if improvement < settings.tolerance {
                converged = true;
                break;
            }
        }
        Ok(SlqSolution {
            states: traj.states,
            inputs: traj.inputs,
            gains,
            feedforward,
            cost_history: history,
            timings,
            step_sizes,
            converged,
            total_time: start.elapsed(),
        })
    }
}

/// One classical Runge-Kutta step of `xdot = f(x)`.
pub fn rk4(
    mut f: impl FnMut(&DVector<f64>) -> Result<DVector<f64>>,
    x: &DVector<f64>,
    dt: f64,
) -> Result<DVector<f64>> {
    let k1 = f(x)?;
    let k2 = f(&(x + &k1 * (0.5 * dt)))?;
    let k3 = f(&(x + &k2 * (0.5 * dt)))?;
    let k4 = f(&(x + &k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}
