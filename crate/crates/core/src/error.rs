use thiserror::Error;

/// Errors raised by the kernels, graph builders, propagation operators and trainer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("non-finite value produced by {context}")]
    NonFinite { context: String },

    #[error("degenerate basis: column {column} has residual norm {norm:e} after orthogonalization")]
    DegenerateBasis { column: usize, norm: f64 },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular matrix: pivot {magnitude:e} at elimination step {step}")]
    Singular { step: usize, magnitude: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("split error: {0}")]
    Split(String),

    #[error("invalid regularizer spec: {0}")]
    Spec(String),

    #[error("ill-posed parameter map (lambda = {lambda}, mu = {mu}): {message}")]
    Parameter {
        lambda: f64,
        mu: f64,
        message: String,
    },

    #[error("operator is not positive semidefinite: eigenvalue {index} = {value:e}")]
    PsdViolation { index: usize, value: f64 },

    #[error("dense oracle limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("theorem verification failed for {variant}: discrepancy {discrepancy:e} > {tolerance:e}")]
    TheoremMismatch {
        variant: String,
        discrepancy: f64,
        tolerance: f64,
    },

    #[error("numeric failure in layer {layer}: {message}")]
    Numeric { layer: usize, message: String },

    #[error("training aborted at epoch {epoch}: {source}")]
    Training {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("index set is empty: {0}")]
    EmptyIndexSet(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// True for failures of numerical origin (divergence, singularity, non-convergence).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NonFinite { .. }
            | Error::DegenerateBasis { .. }
            | Error::NoConvergence { .. }
            | Error::Singular { .. }
            | Error::PsdViolation { .. }
            | Error::Numeric { .. } => true,
            Error::Training { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
