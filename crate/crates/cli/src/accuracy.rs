//! Derivative accuracy: every provider against the others, the analytic
//! torque Jacobians and, for a single revolute joint, the closed form.

use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use rbdad::compile::{JacobianMode, OptimizationConfig};
use rbdad::deriv::{
    analytic_torque_jacobian, AnalyticMethod, DerivativeEngine, DerivativeProvider,
    RobotDerivatives,
};
use rbdad::dynamics::crba;
use rbdad::model::{JointKind, Placement, RobotModel};
use rbdad::sampling::{StateSampler, DEFAULT_SEED};
use rbdad::VectorFunction;
use serde::Serialize;

use crate::{parallel_map, Result};

/// AD providers agree to rounding: max entry difference relative to
/// `max(1, max |J|)`.
pub const PROVIDER_AGREEMENT: f64 = 1e-12;
/// AD against both analytic torque-Jacobian paths, Frobenius norm.
pub const ANALYTIC_AGREEMENT: f64 = 1e-12;
/// Single-sided NumDiff against AD, max absolute difference.
pub const NUMDIFF_BAND: (f64, f64) = (1e-9, 1e-3);
/// Providers against the single-joint closed form, max absolute difference.
pub const CLOSED_FORM_AGREEMENT: f64 = 1e-10;
/// Inertia identities `D_qdd = M` and `D_qdd = (S M^-1 S^T)^-1`, Frobenius.
pub const STRUCTURE_AGREEMENT: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct AccuracySettings {
    pub seed: u64,
    pub states: usize,
    pub threads: usize,
}

impl Default for AccuracySettings {
    fn default() -> Self {
        AccuracySettings {
            seed: DEFAULT_SEED,
            states: 100,
            threads: 1,
        }
    }
}

/// Which difference a row is judged on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MaxAbs,
    Frobenius,
    MaxRel,
}

/// One comparison, aggregated as the maximum over all sampled states.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub function: String,
    pub provider_a: String,
    pub provider_b: String,
    pub states: usize,
    pub max_abs_diff: f64,
    pub frobenius_diff: f64,
    pub max_rel_diff: f64,
    pub metric: Metric,
    pub lower: Option<f64>,
    pub upper: f64,
    pub pass: bool,
}

impl AccuracyRow {
    pub fn measured(&self) -> f64 {
        match self.metric {
            Metric::MaxAbs => self.max_abs_diff,
            Metric::Frobenius => self.frobenius_diff,
            Metric::MaxRel => self.max_rel_diff,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AccuracyReport {
    pub model: String,
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, function: &str, provider_a: &str, provider_b: &str) -> Option<&AccuracyRow> {
        self.rows.iter().find(|r| {
            r.function == function && r.provider_a == provider_a && r.provider_b == provider_b
        })
    }

    /// Fixed-width table of every row.
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<14} {:<16} {:<16} {:>11} {:>11} {:>11}  {:<9} {}\n",
            "function",
            "provider_a",
            "provider_b",
            "max_abs",
            "frobenius",
            "max_rel",
            "metric",
            "status"
        );
        for r in &self.rows {
            s += &format!(
                "{:<14} {:<16} {:<16} {:>11.3e} {:>11.3e} {:>11.3e}  {:<9} {}\n",
                r.function,
                r.provider_a,
                r.provider_b,
                r.max_abs_diff,
                r.frobenius_diff,
                r.max_rel_diff,
                format!("{:?}", r.metric).to_lowercase(),
                if r.pass { "pass" } else { "FAIL" }
            );
        }
        s
    }
}

struct Comparison {
    function: &'static str,
    a: &'static str,
    b: &'static str,
    metric: Metric,
    lower: Option<f64>,
    upper: f64,
}

#[derive(Default, Clone, Copy)]
struct Accumulator {
    states: usize,
    max_abs: f64,
    frob: f64,
    rel: f64,
}

impl Accumulator {
    fn add(&mut self, a: &DMatrix<f64>, b: &DMatrix<f64>) {
        let d = a - b;
        self.states += 1;
        self.max_abs = self.max_abs.max(d.amax());
        self.frob = self.frob.max(d.norm());
        self.rel = self.rel.max(d.amax() / a.amax().max(b.amax()).max(1.0));
    }

    fn row(self, c: &Comparison) -> AccuracyRow {
        let mut row = AccuracyRow {
            function: c.function.to_string(),
            provider_a: c.a.to_string(),
            provider_b: c.b.to_string(),
            states: self.states,
            max_abs_diff: self.max_abs,
            frobenius_diff: self.frob,
            max_rel_diff: self.rel,
            metric: c.metric,
            lower: c.lower,
            upper: c.upper,
            pass: false,
        };
        let v = row.measured();
        row.pass =
            self.states > 0 && v.is_finite() && v <= c.upper && c.lower.is_none_or(|l| v >= l);
        row
    }
}

/// A sampled state in all the layouts the maps use.
struct Sample {
    q: Vec<f64>,
    qd: Vec<f64>,
    u: Vec<f64>,
    qdd: Vec<f64>,
}

impl Sample {
    fn cat(parts: &[&[f64]]) -> Vec<f64> {
        parts.concat()
    }
}

fn samples(model: &RobotModel, settings: &AccuracySettings) -> Vec<Sample> {
    let mut s = StateSampler::new(settings.seed);
    (0..settings.states)
        .map(|_| Sample {
            q: s.position(model),
            qd: s.velocity(model),
            u: s.torque(model),
            qdd: s.acceleration(model),
        })
        .collect()
}

/// Closed-form forward dynamics of a single revolute joint on the world
/// with an identity placement: `qdd = (u + tau_g(q)) / I`.
#[derive(Clone, Copy, Debug)]
pub struct SingleJointClosedForm {
    axis: Vector3<f64>,
    com: Vector3<f64>,
    weight: Vector3<f64>,
    inertia: f64,
}

impl SingleJointClosedForm {
    pub fn for_model(model: &RobotModel) -> Option<Self> {
        let [link] = model.links.as_slice() else {
            return None;
        };
        if link.parent.is_some()
            || link.joint.kind != JointKind::Revolute
            || link.joint.placement != Placement::IDENTITY
        {
            return None;
        }
        let axis = Vector3::from(link.joint.axis).normalize();
        let com = Vector3::from(link.inertia.com);
        let m = link.inertia.mass;
        let ic = nalgebra::Matrix3::from(link.inertia.tensor());
        let about_origin =
            ic + (nalgebra::Matrix3::identity() * com.norm_squared() - com * com.transpose()) * m;
        Some(SingleJointClosedForm {
            axis,
            com,
            weight: Vector3::from(model.gravity) * m,
            inertia: (axis.transpose() * about_origin * axis)[0],
        })
    }

    /// `[dqdd/dq, dqdd/dqd, dqdd/du]`.
    pub fn fd_jacobian(&self, q: f64) -> DMatrix<f64> {
        let a = &self.axis;
        let c = &self.com;
        let r = c * q.cos() + a.cross(c) * q.sin() + a * a.dot(c) * (1.0 - q.cos());
        let dtau = a.dot(&a.cross(&r).cross(&self.weight));
        DMatrix::from_row_slice(1, 3, &[dtau / self.inertia, 0.0, 1.0 / self.inertia])
    }
}

fn engine_rows<F: VectorFunction>(
    function: &'static str,
    engine: &DerivativeEngine<F>,
    inputs: &[Vec<f64>],
) -> Result<Vec<AccuracyRow>> {
    let comparisons = [
        Comparison {
            function,
            a: "forward_ad",
            b: "compiled_ad",
            metric: Metric::MaxRel,
            lower: None,
            upper: PROVIDER_AGREEMENT,
        },
        Comparison {
            function,
            a: "reverse_ad",
            b: "compiled_ad",
            metric: Metric::MaxRel,
            lower: None,
            upper: PROVIDER_AGREEMENT,
        },
        Comparison {
            function,
            a: "compiled_fwd",
            b: "compiled_rev",
            metric: Metric::MaxRel,
            lower: None,
            upper: PROVIDER_AGREEMENT,
        },
        Comparison {
            function,
            a: "numdiff",
            b: "compiled_ad",
            metric: Metric::MaxAbs,
            lower: Some(NUMDIFF_BAND.0),
            upper: NUMDIFF_BAND.1,
        },
    ];
    let mut acc = [Accumulator::default(); 4];
    for x in inputs {
        let compiled = engine.jacobian(x, DerivativeProvider::CompiledAD)?.1;
        let fwd = engine.compiled_jacobian(x, JacobianMode::Forward)?.1;
        let rev = engine.compiled_jacobian(x, JacobianMode::Reverse)?.1;
        acc[0].add(
            &engine.jacobian(x, DerivativeProvider::ForwardAD)?.1,
            &compiled,
        );
        acc[1].add(
            &engine.jacobian(x, DerivativeProvider::ReverseAD)?.1,
            &compiled,
        );
        acc[2].add(&fwd, &rev);
        acc[3].add(
            &engine.jacobian(x, DerivativeProvider::NumDiff)?.1,
            &compiled,
        );
    }
    Ok(acc
        .iter()
        .zip(&comparisons)
        .map(|(a, c)| a.row(c))
        .collect())
}

fn torque_rows(d: &RobotDerivatives, samples: &[Sample]) -> Result<Vec<AccuracyRow>> {
    let model = d.model();
    let closed = SingleJointClosedForm::for_model(model);
    let mut comparisons = vec![
        Comparison {
            function: "fd_wrt_tau",
            a: "compiled_ad",
            b: "analytic_dense",
            metric: Metric::Frobenius,
            lower: None,
            upper: ANALYTIC_AGREEMENT,
        },
        Comparison {
            function: "fd_wrt_tau",
            a: "compiled_ad",
            b: "analytic_ltl",
            metric: Metric::Frobenius,
            lower: None,
            upper: ANALYTIC_AGREEMENT,
        },
        Comparison {
            function: "fd_wrt_tau",
            a: "numdiff",
            b: "compiled_ad",
            metric: Metric::MaxAbs,
            lower: Some(NUMDIFF_BAND.0),
            upper: NUMDIFF_BAND.1,
        },
    ];
    if closed.is_some() {
        for p in ["forward_ad", "reverse_ad", "compiled_ad"] {
            comparisons.push(Comparison {
                function: "fd",
                a: p,
                b: "closed_form",
                metric: Metric::MaxAbs,
                lower: None,
                upper: CLOSED_FORM_AGREEMENT,
            });
        }
        comparisons.push(Comparison {
            function: "fd_wrt_tau",
            a: "analytic_ltl",
            b: "closed_form",
            metric: Metric::MaxAbs,
            lower: None,
            upper: CLOSED_FORM_AGREEMENT,
        });
    }
    let mut acc = vec![Accumulator::default(); comparisons.len()];
    for s in samples {
        let b = d.fd_torque_jacobian(&s.q, &s.qd, &s.u, DerivativeProvider::CompiledAD)?;
        let dense = analytic_torque_jacobian(model, &s.q, AnalyticMethod::DenseInverse)?;
        let ltl = analytic_torque_jacobian(model, &s.q, AnalyticMethod::LtL)?;
        acc[0].add(&b, &dense);
        acc[1].add(&b, &ltl);
        acc[2].add(
            &d.fd_torque_jacobian(&s.q, &s.qd, &s.u, DerivativeProvider::NumDiff)?,
            &b,
        );
        if let Some(cf) = &closed {
            let expected = cf.fd_jacobian(s.q[0]);
            let x = Sample::cat(&[&s.q, &s.qd, &s.u]);
            let engine = d.forward_dynamics();
            let ad = [
                engine.jacobian(&x, DerivativeProvider::ForwardAD)?.1,
                engine.jacobian(&x, DerivativeProvider::ReverseAD)?.1,
                engine.jacobian(&x, DerivativeProvider::CompiledAD)?.1,
            ];
            for (k, j) in ad.iter().enumerate() {
                acc[3 + k].add(j, &expected);
            }
            acc[6].add(&ltl, &expected.columns(2, 1).into_owned());
        }
    }
    Ok(acc
        .iter()
        .zip(&comparisons)
        .map(|(a, c)| a.row(c))
        .collect())
}

fn structure_rows(d: &RobotDerivatives, samples: &[Sample]) -> Result<Vec<AccuracyRow>> {
    let model = d.model();
    let mut comparisons = vec![Comparison {
        function: "id_wrt_qdd",
        a: "compiled_ad",
        b: "crba",
        metric: Metric::Frobenius,
        lower: None,
        upper: STRUCTURE_AGREEMENT,
    }];
    if model.has_floating_base() {
        comparisons.push(Comparison {
            function: "fbid_wrt_qdd",
            a: "compiled_ad",
            b: "crba_schur",
            metric: Metric::Frobenius,
            lower: None,
            upper: STRUCTURE_AGREEMENT,
        });
    }
    let mut acc = vec![Accumulator::default(); comparisons.len()];
    for s in samples {
        let m = crba(&model.params::<f64>(), &s.q)?.to_dmatrix();
        let id = d.id_derivatives(&s.q, &s.qd, &s.qdd, DerivativeProvider::CompiledAD)?;
        acc[0].add(&id.d_qdd, &m);
        if model.has_floating_base() {
            let sel = model.selection_matrix();
            let minv = m
                .clone()
                .try_inverse()
                .ok_or_else(|| rbdad::Error::Numerical("singular inertia".into()))?;
            let schur = (&sel * minv * sel.transpose())
                .try_inverse()
                .ok_or_else(|| rbdad::Error::Numerical("singular actuated inertia".into()))?;
            let qdd_a = &s.qdd[model.actuated_offset()..];
            let fb =
                d.floating_base_id_derivatives(&s.q, &s.qd, qdd_a, DerivativeProvider::CompiledAD)?;
            acc[1].add(&fb.d_qdd, &schur);
        }
    }
    Ok(acc
        .iter()
        .zip(&comparisons)
        .map(|(a, c)| a.row(c))
        .collect())
}

#[derive(Clone, Copy)]
enum Cell {
    Torque,
    Structure,
    Fd,
    Id,
    FloatingBaseId,
    Kinematics,
}

/// Runs every comparison at `settings.states` seeded states.
pub fn run_accuracy_suite(
    model: Arc<RobotModel>,
    settings: &AccuracySettings,
) -> Result<AccuracyReport> {
    let d = RobotDerivatives::new(model.clone(), &OptimizationConfig::default(), settings.seed)?;
    let samples = samples(&model, settings);
    let mut cells = vec![Cell::Torque, Cell::Structure, Cell::Fd, Cell::Id];
    if model.has_floating_base() {
        cells.push(Cell::FloatingBaseId);
    }
    if !model.end_effectors.is_empty() {
        cells.push(Cell::Kinematics);
    }
    let off = model.actuated_offset();
    let results = parallel_map(
        &cells,
        settings.threads,
        |cell| -> Result<Vec<AccuracyRow>> {
            match cell {
                Cell::Torque => torque_rows(&d, &samples),
                Cell::Structure => structure_rows(&d, &samples),
                Cell::Fd => {
                    let xs: Vec<_> = samples
                        .iter()
                        .map(|s| Sample::cat(&[&s.q, &s.qd, &s.u]))
                        .collect();
                    engine_rows("fd", d.forward_dynamics(), &xs)
                }
                Cell::Id => {
                    let xs: Vec<_> = samples
                        .iter()
                        .map(|s| Sample::cat(&[&s.q, &s.qd, &s.qdd]))
                        .collect();
                    engine_rows("id", d.inverse_dynamics(), &xs)
                }
                Cell::FloatingBaseId => {
                    let xs: Vec<_> = samples
                        .iter()
                        .map(|s| Sample::cat(&[&s.q, &s.qd, &s.qdd[off..]]))
                        .collect();
                    engine_rows("fbid", d.floating_base_inverse_dynamics()?, &xs)
                }
                Cell::Kinematics => {
                    let xs: Vec<_> = samples
                        .iter()
                        .map(|s| Sample::cat(&[&s.q, &s.qd]))
                        .collect();
                    engine_rows("kinematics", d.kinematics()?, &xs)
                }
            }
        },
    );
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(AccuracyReport {
        model: model.name.clone(),
        rows,
    })
}
