//! Accuracy, timing and trajectory-optimization harness over the `rbdad`
//! derivative providers.
//!
//! Each suite returns a report whose rows serialize to a CSV file with a
//! fixed header, plus named checks that decide the exit status.

pub mod accuracy;
pub mod measure;
pub mod slq;
pub mod timing;

use std::fmt;
use std::path::Path;

use rbdad::model::{fixture_text, parse_model, RobotModel};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rbdad::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Loads a model from a fixture name or a file path.
pub fn load_model(spec: &str) -> Result<RobotModel> {
    if let Some(text) = fixture_text(spec) {
        return Ok(parse_model(text)?);
    }
    let text = std::fs::read_to_string(spec).map_err(|source| CliError::Io {
        path: spec.to_string(),
        source,
    })?;
    Ok(parse_model(&text)?)
}

/// A pass/fail assertion with the measured value and its bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    /// Inclusive band check; `None` leaves that side open.
    pub fn within(
        name: impl Into<String>,
        measured: f64,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Self {
        let pass = measured.is_finite()
            && lower.is_none_or(|l| measured >= l)
            && upper.is_none_or(|u| measured <= u);
        Check {
            name: name.into(),
            measured,
            lower,
            upper,
            pass,
        }
    }

    /// Strict check `measured < bound`.
    pub fn below(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            lower: None,
            upper: Some(bound),
            pass: measured.is_finite() && measured < bound,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}: {:.3e}", self.name, self.measured)?;
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => write!(f, " in [{l:.1e}, {u:.1e}]"),
            (Some(l), None) => write!(f, " >= {l:.1e}"),
            (None, Some(u)) => write!(f, " <= {u:.1e}"),
            (None, None) => Ok(()),
        }
    }
}

/// Writes serializable rows to `dir/name` with a header line.
pub fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut w = csv::Writer::from_path(dir.join(name))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: dir.join(name).display().to_string(),
        source,
    })?;
    Ok(())
}

/// Runs `f` on the items with up to `threads` workers, keeping input order.
pub fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| scope.spawn(move || c.iter().map(f).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}
