use thiserror::Error;

/// Errors raised by gramian assembly, simulation, reduction and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("centering kind `steady` requires a reference vector")]
    MissingReference,

    #[error("invalid snapshot data: {0}")]
    InvalidSnapshot(String),

    #[error("invalid block partition: {0}")]
    InvalidBlocks(String),

    #[error("simulation diverged at step {step}{context}")]
    Divergence { step: usize, context: String },

    #[error("operation requires a square system (inputs = outputs), got m = {inputs}, o = {outputs}")]
    SquareSystemRequired { inputs: usize, outputs: usize },

    #[error("operation requires at least one parameter")]
    NoParameters,

    #[error("requested order {requested} exceeds numerical rank; largest feasible order is {max_feasible}")]
    RankDeficient { requested: usize, max_feasible: usize },

    #[error("invalid reduced order {order} for dimension {dim}")]
    InvalidOrder { order: usize, dim: usize },

    #[error("relative error undefined: reference output has zero norm")]
    UndefinedRelativeError,

    #[error("system matrix is not Hurwitz (max real eigenvalue part {0:e})")]
    NotHurwitz(f64),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Attach a perturbation index description to a divergence error.
    pub(crate) fn with_context(self, ctx: impl FnOnce() -> String) -> Self {
        match self {
            Error::Divergence { step, context } => Error::Divergence {
                step,
                context: format!("{} {}", context, ctx()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
