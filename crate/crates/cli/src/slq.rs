//! SLQ runs from problem files, with cost, timing and trajectory CSVs.

use std::path::Path;

use rbdad::compile::OptimizationConfig;
use rbdad::deriv::DerivativeProvider;
use rbdad::slq::{
    load_problem, parse_problem, problem_text, ProblemFile, SlqSettings, SlqSolution, SlqSolver,
};
use serde::Serialize;

use crate::{write_csv, Check, CliError, Result};

/// NumDiff and CompiledAD per-iteration costs agree to this relative amount.
pub const COST_AGREEMENT: f64 = 1e-2;

/// Loads a problem from a shipped fixture name or a TOML file path.
pub fn load(spec: &str) -> Result<ProblemFile> {
    if let Some(text) = problem_text(spec) {
        return Ok(parse_problem(text, None)?);
    }
    if !Path::new(spec).exists() {
        return Err(CliError::Usage(format!(
            "no problem fixture or file named '{spec}'"
        )));
    }
    Ok(load_problem(spec)?)
}

/// Parses `numdiff` or `compiled`.
pub fn parse_provider(name: &str) -> Result<DerivativeProvider> {
    match name {
        "numdiff" => Ok(DerivativeProvider::NumDiff),
        "compiled" | "compiled_ad" => Ok(DerivativeProvider::CompiledAD),
        _ => Err(CliError::Usage(format!(
            "unknown SLQ provider '{name}' (numdiff or compiled)"
        ))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CostRow {
    pub provider: &'static str,
    pub iteration: usize,
    pub cost: f64,
    pub step_size: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationTimingRow {
    pub provider: &'static str,
    pub iteration: usize,
    pub linearization_s: f64,
    pub backward_pass_s: f64,
    pub line_search_s: f64,
    pub total_s: f64,
}

pub struct SlqRun {
    pub provider: DerivativeProvider,
    pub solution: SlqSolution,
}

impl SlqRun {
    pub fn linearization_s(&self) -> f64 {
        self.solution
            .timings
            .iter()
            .map(|t| t.linearization.as_secs_f64())
            .sum()
    }

    pub fn total_s(&self) -> f64 {
        self.solution.total_time.as_secs_f64()
    }

    fn cost_rows(&self) -> Vec<CostRow> {
        let provider = self.provider.name();
        self.solution
            .cost_history
            .iter()
            .enumerate()
            .map(|(i, &cost)| CostRow {
                provider,
                iteration: i,
                cost,
                step_size: i.checked_sub(1).map(|k| self.solution.step_sizes[k]),
            })
            .collect()
    }

    fn timing_rows(&self) -> Vec<IterationTimingRow> {
        let provider = self.provider.name();
        self.solution
            .timings
            .iter()
            .enumerate()
            .map(|(i, t)| IterationTimingRow {
                provider,
                iteration: i + 1,
                linearization_s: t.linearization.as_secs_f64(),
                backward_pass_s: t.backward_pass.as_secs_f64(),
                line_search_s: t.line_search.as_secs_f64(),
                total_s: t.total().as_secs_f64(),
            })
            .collect()
    }
}

pub struct SlqReport {
    pub runs: Vec<SlqRun>,
    pub compile_time_s: f64,
    pub checks: Vec<Check>,
}

impl SlqReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Writes `costs.csv`, `timings.csv` and `trajectory.csv` (first run).
    pub fn write(&self, dir: &Path, dt: f64) -> Result<()> {
        let costs: Vec<_> = self.runs.iter().flat_map(SlqRun::cost_rows).collect();
        write_csv(dir, "costs.csv", &costs)?;
        let timings: Vec<_> = self.runs.iter().flat_map(SlqRun::timing_rows).collect();
        write_csv(dir, "timings.csv", &timings)?;
        let Some(run) = self.runs.first() else {
            return Ok(());
        };
        let sol = &run.solution;
        let nx = sol.states[0].len();
        let nu = sol.inputs.first().map_or(0, |u| u.len());
        let mut w = csv::Writer::from_path(dir.join("trajectory.csv"))?;
        let mut header = vec!["step".to_string(), "time".to_string()];
        header.extend((0..nx).map(|i| format!("x{i}")));
        header.extend((0..nu).map(|i| format!("u{i}")));
        w.write_record(&header)?;
        for (t, x) in sol.states.iter().enumerate() {
            let mut rec = vec![t.to_string(), format!("{}", t as f64 * dt)];
            rec.extend(x.iter().map(|v| v.to_string()));
            match sol.inputs.get(t) {
                Some(u) => rec.extend(u.iter().map(|v| v.to_string())),
                None => rec.extend(std::iter::repeat_n(String::new(), nu)),
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|source| CliError::Io {
            path: dir.join("trajectory.csv").display().to_string(),
            source,
        })?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = format!("compile time {:.3} s\n", self.compile_time_s);
        for r in &self.runs {
            let sol = &r.solution;
            s += &format!(
                "{:<12} iterations {:>3}  converged {:<5}  cost {:.6e} -> {:.6e}  total {:.3} s  linearization {:.3} s\n",
                r.provider.name(),
                sol.iterations(),
                sol.converged,
                sol.cost_history[0],
                sol.final_cost(),
                r.total_s(),
                r.linearization_s()
            );
        }
        let ad = self
            .runs
            .iter()
            .find(|r| r.provider == DerivativeProvider::CompiledAD);
        let nd = self
            .runs
            .iter()
            .find(|r| r.provider == DerivativeProvider::NumDiff);
        if let (Some(ad), Some(nd)) = (ad, nd) {
            s += &format!(
                "linearization speedup compiled_ad over numdiff {:.2}\n",
                nd.linearization_s() / ad.linearization_s()
            );
        }
        for c in &self.checks {
            s += &format!("{c}\n");
        }
        s
    }
}

/// Largest relative difference between per-iteration costs over the
/// iterations both runs reached.
pub fn cost_disagreement(a: &SlqSolution, b: &SlqSolution) -> f64 {
    a.cost_history
        .iter()
        .zip(&b.cost_history)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Solves `problem` with each provider in turn. With both providers the
/// cost histories are compared and CompiledAD must finish first.
pub fn run_slq(
    problem: &ProblemFile,
    providers: &[DerivativeProvider],
    settings: &SlqSettings,
) -> Result<SlqReport> {
    let solver = SlqSolver::new(problem.problem.clone(), &OptimizationConfig::default())?;
    let mut runs = Vec::new();
    let mut checks = Vec::new();
    for &provider in providers {
        let solution = solver.solve(provider, settings)?;
        let monotone = solution.cost_history.windows(2).all(|w| w[1] <= w[0]);
        checks.push(Check {
            name: format!("{} accepted costs non-increasing", provider.name()),
            measured: solution.final_cost(),
            lower: None,
            upper: None,
            pass: monotone && solution.cost_history.iter().all(|c| c.is_finite()),
        });
        runs.push(SlqRun { provider, solution });
    }
    let ad = runs
        .iter()
        .find(|r| r.provider == DerivativeProvider::CompiledAD);
    let nd = runs
        .iter()
        .find(|r| r.provider == DerivativeProvider::NumDiff);
    if let (Some(ad), Some(nd)) = (ad, nd) {
        checks.push(Check::within(
            "per-iteration cost difference numdiff vs compiled_ad",
            cost_disagreement(&ad.solution, &nd.solution),
            None,
            Some(COST_AGREEMENT),
        ));
        checks.push(Check {
            name: "total solve time ratio numdiff / compiled_ad".into(),
            measured: nd.total_s() / ad.total_s(),
            lower: Some(1.0),
            upper: None,
            pass: ad.total_s() < nd.total_s(),
        });
    }
    Ok(SlqReport {
        runs,
        compile_time_s: solver.compile_time().as_secs_f64(),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reach_report_is_written() {
        let problem = load("two_link_reach").unwrap();
        let report = run_slq(
            &problem,
            &[DerivativeProvider::CompiledAD, DerivativeProvider::NumDiff],
            &problem.settings,
        )
        .unwrap();
        assert!(report.all_pass(), "{}", report.summary());
        let dir = tempfile::tempdir().unwrap();
        report.write(dir.path(), problem.problem.dt).unwrap();
        let costs = std::fs::read_to_string(dir.path().join("costs.csv")).unwrap();
        assert!(costs.starts_with("provider,iteration,cost,step_size\n"));
        let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert_eq!(traj.lines().count(), 1 + 201);
        assert!(traj.starts_with("step,time,x0,x1,x2,x3,u0,u1\n"));
        let timings = std::fs::read_to_string(dir.path().join("timings.csv")).unwrap();
        assert!(timings.starts_with(
            "provider,iteration,linearization_s,backward_pass_s,line_search_s,total_s\n"
        ));
    }

    #[test]
    fn provider_names_parse() {
        assert_eq!(
            parse_provider("numdiff").unwrap(),
            DerivativeProvider::NumDiff
        );
        assert_eq!(
            parse_provider("compiled").unwrap(),
            DerivativeProvider::CompiledAD
        );
        assert!(parse_provider("analytic").is_err());
        assert!(load("no_such_problem").is_err());
    }
}
