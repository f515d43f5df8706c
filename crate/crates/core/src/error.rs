use thiserror::Error;

/// Malformed model text, with the 1-based line it was found on.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("parse error at {0}")]
    Parse(#[from] ParseError),

    #[error("invalid model: {0}")]
    Validation(String),

    #[error("unknown end effector `{0}`")]
    UnknownEndEffector(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("recording failed: {0}")]
    Record(String),

    #[error("model has no floating base")]
    NotFloatingBase,

    #[error("base pitch {pitch:.4} rad is too close to the Euler-angle singularity")]
    SingularOrientation { pitch: f64 },

    #[error("rollout diverged at step {step} (state norm {norm:.3e})")]
    DivergedRollout { step: usize, norm: f64 },

    #[error("Riccati backward pass failed: {0}")]
    RiccatiFailure(String),

    #[error("{provider} cannot compute {what}")]
    Unsupported {
        provider: &'static str,
        what: &'static str,
    },

    #[error("tape file: {0}")]
    TapeFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
