use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rbdad::deriv::DerivativeProvider;
use rbdad::sampling::DEFAULT_SEED;
use rbdad_cli::accuracy::{run_accuracy_suite, AccuracySettings};
use rbdad_cli::slq::{load, run_slq};
use rbdad_cli::timing::{emit_programs, run_timing_suite, TimingSettings};
use rbdad_cli::{load_model, write_csv, Result};

#[derive(Parser)]
#[command(
    name = "rbdad",
    version,
    about = "Derivative accuracy, timing and SLQ harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare every derivative provider at seeded random states.
    Accuracy {
        /// Fixture name or model file.
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Number of random states.
        #[arg(long, default_value_t = 100)]
        states: usize,
        /// Worker threads for independent comparisons.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Directory for accuracy.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median Jacobian runtimes per provider and mode.
    Timing {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Write the compiled programs as `<function>_<mode>.c.txt`.
        #[arg(long)]
        emit_dir: Option<PathBuf>,
        /// Directory for timing.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an SLQ problem.
    Slq {
        /// Problem fixture name or TOML file.
        #[arg(long)]
        problem: String,
        #[arg(long, value_enum, default_value_t = ProviderArg::Compiled)]
        provider: ProviderArg,
        /// Worker threads for the linearization; 0 uses every core.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Overrides the problem's iteration limit.
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Directory for costs.csv, timings.csv and trajectory.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Numdiff,
    Compiled,
    /// Both providers, with the agreement and runtime checks.
    Both,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Accuracy {
            model,
            seed,
            states,
            threads,
            out,
        } => {
            let model = Arc::new(load_model(&model)?);
            let report = run_accuracy_suite(
                model,
                &AccuracySettings {
                    seed,
                    states,
                    threads,
                },
            )?;
            print!("{}", report.table());
            if let Some(dir) = out {
                write_csv(&dir, "accuracy.csv", &report.rows)?;
            }
            Ok(report.all_pass())
        }
        Command::Timing {
            model,
            reps,
            seed,
            emit_dir,
            out,
        } => {
            if cfg!(debug_assertions) {
                eprintln!(
                    "warning: unoptimized build; timings are not representative (use --release)"
                );
            }
            let model = Arc::new(load_model(&model)?);
            if let Some(dir) = emit_dir {
                emit_programs(model.clone(), seed, &dir)?;
            }
            let report = run_timing_suite(model, &TimingSettings { reps, seed })?;
            print!("{}", report.table());
            if let Some(dir) = out {
                write_csv(&dir, "timing.csv", &report.rows)?;
            }
            Ok(report.all_pass())
        }
        Command::Slq {
            problem,
            provider,
            threads,
            max_iterations,
            out,
        } => {
            let problem = load(&problem)?;
            let mut settings = problem.settings;
            settings.threads = threads;
            if let Some(n) = max_iterations {
                settings.max_iterations = n;
            }
            let providers: &[DerivativeProvider] = match provider {
                ProviderArg::Numdiff => &[DerivativeProvider::NumDiff],
                ProviderArg::Compiled => &[DerivativeProvider::CompiledAD],
                ProviderArg::Both => &[DerivativeProvider::CompiledAD, DerivativeProvider::NumDiff],
            };
            let report = run_slq(&problem, providers, &settings)?;
            print!("{}", report.summary());
            if let Some(dir) = out {
                report.write(&dir, problem.problem.dt)?;
            }
            Ok(report.all_pass())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
