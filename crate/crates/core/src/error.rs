use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{method} did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular matrix: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("matrix is not positive definite at row {row}")]
    NotPositiveDefinite { row: usize },

    #[error("incompatible right-hand side: constant component {residual:.3e} exceeds tolerance")]
    Incompatible { residual: f64 },

    #[error("field unavailable: {0}")]
    Unavailable(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("mesh refinement closure did not terminate within {sweeps} sweeps")]
    RefinementClosure { sweeps: usize },

    #[error("step {step} failed in the {equation} equation: {source}")]
    Step {
        step: usize,
        equation: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn in_equation(self, equation: &'static str) -> Error {
        Error::Step {
            step: 0,
            equation,
            source: Box::new(self),
        }
    }

    /// Attach the time-step index to an error raised inside a stepper.
    pub fn at_step(self, step: usize) -> Error {
        match self {
            Error::Step {
                equation, source, ..
            } => Error::Step {
                step,
                equation,
                source,
            },
            other => Error::Step {
                step,
                equation: "unknown",
                source: Box::new(other),
            },
        }
    }
}
