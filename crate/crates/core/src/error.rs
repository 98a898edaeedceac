use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The right-hand side is not in the column space of the data matrix.
    #[error("task not realizable: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    InfeasibleTask { residual: f64, tol: f64 },

    /// The teacher has no component in the row space of the data matrix, so
    /// the forgetting normalization is undefined.
    #[error("degenerate teacher: projection onto the row space of X vanishes")]
    DegenerateTeacher,

    /// Gradient descent ran out of iterations; carries the last iterate.
    #[error(
        "no convergence after {iters} iterations: residual {residual:.3e} > tolerance {tol:.3e}"
    )]
    NonConvergence {
        iters: usize,
        residual: f64,
        tol: f64,
        last: Vec<f64>,
    },

    /// Total monomial degree above the combinatorial evaluation budget.
    #[error("monomial degree {degree} exceeds the evaluation budget {budget}")]
    BudgetExceeded { degree: u32, budget: u32 },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// A Monte Carlo trial failed; carries the trial index.
    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn in_trial(trial: u64, source: Error) -> Self {
        Error::Trial {
            trial,
            source: Box::new(source),
        }
    }
}
