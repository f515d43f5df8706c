//! Runtime of every Jacobian provider and mode on one model.

use std::path::Path;
use std::sync::Arc;

use rbdad::autodiff::{forward_jacobian, TapeWorkspace};
use rbdad::compile::{emit_source, JacobianMode, OptimizationConfig};
use rbdad::deriv::{DerivativeEngine, DerivativeProvider, RobotDerivatives};
use rbdad::model::RobotModel;
use rbdad::sampling::DEFAULT_SEED;
use rbdad::VectorFunction;
use serde::Serialize;

use crate::measure::{guarded, median_ns};
use crate::{Check, CliError, Result};

/// Desk-scale floor for the compiled-over-NumDiff speedup of the full
/// forward-dynamics Jacobian.
pub const CODEGEN_SPEEDUP_FLOOR: f64 = 5.0;

#[derive(Clone, Copy, Debug)]
pub struct TimingSettings {
    pub reps: usize,
    pub seed: u64,
}

impl Default for TimingSettings {
    fn default() -> Self {
        TimingSettings {
            reps: 10_000,
            seed: DEFAULT_SEED,
        }
    }
}

/// One provider of one map. `mode` is `fwd`, `rev` or empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub function: String,
    pub provider: String,
    pub mode: String,
    pub median_ns: f64,
    pub instruction_count: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TimingReport {
    pub model: String,
    pub rows: Vec<TimingRow>,
    pub checks: Vec<Check>,
}

impl TimingReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn median(&self, function: &str, provider: &str, mode: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.function == function && r.provider == provider && r.mode == mode)
            .map(|r| r.median_ns)
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<11} {:<12} {:<5} {:>13} {:>12}\n",
            "function", "provider", "mode", "median_ns", "instructions"
        );
        for r in &self.rows {
            s += &format!(
                "{:<11} {:<12} {:<5} {:>13.0} {:>12}\n",
                r.function,
                r.provider,
                r.mode,
                r.median_ns,
                r.instruction_count.map_or(String::new(), |n| n.to_string())
            );
        }
        for c in &self.checks {
            s += &format!("{c}\n");
        }
        s
    }
}

fn mode_tag(mode: JacobianMode) -> &'static str {
    match mode {
        JacobianMode::Forward => "fwd",
        JacobianMode::Reverse => "rev",
    }
}

/// The derivative maps of `d` with their names and probe points.
fn timed_maps(d: &RobotDerivatives) -> Vec<(&'static str, Box<dyn TimedMap + '_>)> {
    let mut maps: Vec<(&'static str, Box<dyn TimedMap + '_>)> = vec![
        ("fd", Box::new(d.forward_dynamics())),
        ("id", Box::new(d.inverse_dynamics())),
    ];
    if let Ok(fb) = d.floating_base_inverse_dynamics() {
        maps.push(("fbid", Box::new(fb)));
    }
    if let Ok(k) = d.kinematics() {
        maps.push(("kinematics", Box::new(k)));
    }
    maps
}

/// What the compiled programs are timed against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    /// Single-sided finite differences.
    NumDiff,
    /// Interpreting the tape, in whichever mode is faster.
    TapeReplay,
}

/// Object-safe view of a [`DerivativeEngine`] for the timing loop.
trait TimedMap {
    fn time(&self, function: &str, reps: usize) -> Result<Vec<TimingRow>>;
    fn compiled_ratio_over(&self, baseline: Baseline, reps: usize) -> Result<f64>;
    fn emit(&self, function: &str, dir: &Path) -> Result<()>;
}

impl<F: VectorFunction> TimedMap for &DerivativeEngine<F> {
    fn time(&self, function: &str, reps: usize) -> Result<Vec<TimingRow>> {
        let x = self.probe();
        let row = |provider: &str, mode: &str, median_ns: f64, instruction_count: Option<usize>| {
            TimingRow {
                function: function.to_string(),
                provider: provider.to_string(),
                mode: mode.to_string(),
                median_ns,
                instruction_count,
            }
        };
        let mut rows = Vec::new();
        self.jacobian(&x, DerivativeProvider::NumDiff)?;
        rows.push(row(
            "numdiff",
            "",
            median_ns(reps, || self.jacobian(&x, DerivativeProvider::NumDiff)),
            None,
        ));
        rows.push(row(
            "forward_ad",
            "fwd",
            median_ns(reps, || forward_jacobian(self.function(), &x, None)),
            None,
        ));
        let tape = self.tape();
        rows.push(row(
            "tape",
            "fwd",
            median_ns(reps, || forward_jacobian(tape, &x, None)),
            Some(tape.n_instructions()),
        ));
        let mut ws = TapeWorkspace::default();
        rows.push(row(
            "tape",
            "rev",
            median_ns(reps, || tape.reverse_jacobian_with(&x, &mut ws).map(|_| ())),
            Some(tape.n_instructions()),
        ));
        for mode in [JacobianMode::Forward, JacobianMode::Reverse] {
            let p = self.compiled(mode);
            let mut out = vec![0.0; p.program().n_outputs()];
            let mut ws = p.program().workspace();
            rows.push(row(
                "compiled_ad",
                mode_tag(mode),
                median_ns(reps, || p.program().eval_with(&mut ws, &x, &mut out)),
                Some(p.n_instructions()),
            ));
        }
        Ok(rows)
    }

    /// Median time of `baseline` over that of the preferred compiled mode.
    fn compiled_ratio_over(&self, baseline: Baseline, reps: usize) -> Result<f64> {
        let x = self.probe();
        let p = self.compiled(self.preferred_mode());
        let mut out = vec![0.0; p.program().n_outputs()];
        let mut ws = p.program().workspace();
        let compiled = median_ns(reps, || p.program().eval_with(&mut ws, &x, &mut out));
        let other = match baseline {
            Baseline::NumDiff => median_ns(reps, || self.jacobian(&x, DerivativeProvider::NumDiff)),
            Baseline::TapeReplay => {
                let mut tws = TapeWorkspace::default();
                let rev = median_ns(reps, || {
                    self.tape().reverse_jacobian_with(&x, &mut tws).map(|_| ())
                });
                let fwd = median_ns(reps, || forward_jacobian(self.tape(), &x, None));
                rev.min(fwd)
            }
        };
        Ok(other / compiled.max(1.0))
    }

    fn emit(&self, function: &str, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for mode in [JacobianMode::Forward, JacobianMode::Reverse] {
            let name = format!("{function}_{}", mode.name());
            let path = dir.join(format!("{name}.c.txt"));
            std::fs::write(&path, emit_source(self.compiled(mode).program(), &name)).map_err(
                |source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                },
            )?;
        }
        Ok(())
    }
}

fn guarded_speedup(map: &dyn TimedMap, baseline: Baseline, reps: usize, floor: f64) -> Result<f64> {
    guarded(|| map.compiled_ratio_over(baseline, reps), |r| r >= floor)
}

/// Speedup of the compiled Jacobian of `function` (`fd`, `id`, `fbid` or
/// `kinematics`) over `baseline`, as the ratio of medians over `reps`
/// calls. Repeats up to the guard count until the ratio reaches `floor`.
pub fn compiled_speedup(
    d: &RobotDerivatives,
    function: &str,
    baseline: Baseline,
    reps: usize,
    floor: f64,
) -> Result<f64> {
    let maps = timed_maps(d);
    let (_, map) = maps
        .iter()
        .find(|(n, _)| *n == function)
        .ok_or_else(|| CliError::Usage(format!("no map named '{function}' on this model")))?;
    guarded_speedup(map.as_ref(), baseline, reps, floor)
}

/// Times every map and provider and runs the ratio checks, each with the
/// repetition guard.
pub fn run_timing_suite(model: Arc<RobotModel>, settings: &TimingSettings) -> Result<TimingReport> {
    let d = RobotDerivatives::new(model.clone(), &OptimizationConfig::default(), settings.seed)?;
    let maps = timed_maps(&d);
    let mut rows = Vec::new();
    for (name, map) in &maps {
        rows.extend(map.time(name, settings.reps)?);
    }
    let mut checks = Vec::new();
    for (name, map) in &maps {
        if *name == "fd" {
            let r = guarded_speedup(
                map.as_ref(),
                Baseline::NumDiff,
                settings.reps,
                CODEGEN_SPEEDUP_FLOOR,
            )?;
            checks.push(Check::within(
                "fd speedup compiled_ad over numdiff",
                r,
                Some(CODEGEN_SPEEDUP_FLOOR),
                None,
            ));
        }
        if *name != "fbid" {
            let r = guarded_speedup(map.as_ref(), Baseline::TapeReplay, settings.reps, 1.0)?;
            checks.push(Check {
                name: format!("{name} speedup compiled_ad over tape replay"),
                measured: r,
                lower: Some(1.0),
                upper: None,
                pass: r > 1.0,
            });
        }
    }
    Ok(TimingReport {
        model: model.name.clone(),
        rows,
        checks,
    })
}

/// Writes the compiled programs of every map in both modes to `dir`.
pub fn emit_programs(model: Arc<RobotModel>, seed: u64, dir: &Path) -> Result<()> {
    let d = RobotDerivatives::new(model, &OptimizationConfig::default(), seed)?;
    for (name, map) in timed_maps(&d) {
        map.emit(name, dir)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rbdad::model::fixture;

    #[test]
    fn table_has_both_modes_for_every_map() {
        let model = Arc::new(fixture("arm6").unwrap());
        let report = run_timing_suite(model, &TimingSettings { reps: 20, seed: 1 }).unwrap();
        for f in ["fd", "id", "kinematics"] {
            for mode in ["fwd", "rev"] {
                assert!(
                    report.median(f, "compiled_ad", mode).is_some(),
                    "{f} {mode}"
                );
                assert!(report.median(f, "tape", mode).is_some(), "{f} {mode}");
            }
            assert!(report.median(f, "numdiff", "").is_some());
        }
        assert_eq!(report.checks.len(), 4);
    }

    #[test]
    fn emission_writes_one_file_per_map_and_mode() {
        let dir = tempfile::tempdir().unwrap();
        emit_programs(Arc::new(fixture("pendulum").unwrap()), 1, dir.path()).unwrap();
        let mut names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(
            names,
            [
                "fd_forward.c.txt",
                "fd_reverse.c.txt",
                "id_forward.c.txt",
                "id_reverse.c.txt",
                "kinematics_forward.c.txt",
                "kinematics_reverse.c.txt"
            ]
        );
        let first = std::fs::read_to_string(dir.path().join("fd_reverse.c.txt")).unwrap();
        emit_programs(Arc::new(fixture("pendulum").unwrap()), 1, dir.path()).unwrap();
        assert_eq!(
            first,
            std::fs::read_to_string(dir.path().join("fd_reverse.c.txt")).unwrap()
        );
    }
}
