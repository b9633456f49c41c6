use thiserror::Error;

/// Errors raised anywhere in the geometry → mesh → PDE → inverse-solver pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("normals do not positively span the plane; the body is unbounded")]
    UnboundedBody,
    #[error("halfplane intersection has empty interior")]
    EmptyInterior,
    #[error("negative scale factor {0}")]
    NegativeScale(f64),
    #[error("normals {0} and {1} are (nearly) parallel")]
    DegenerateNormals(usize, usize),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("mesh precondition failed: {0}")]
    MeshPrecondition(String),
    #[error("mesh would need {needed} nodes, cap is {cap}")]
    MeshTooFine { needed: usize, cap: usize },
    #[error("mesh quality refinement did not terminate after {0} insertions")]
    MeshQuality(usize),

    #[error("conjugate gradients hit the iteration cap ({iterations}) at relative residual {residual:e}")]
    LinearSolveFailure { iterations: usize, residual: f64 },
    #[error("discrete maximum principle violated at node {node} (u = {value:e})")]
    MaximumPrincipleViolation { node: usize, value: f64 },
    #[error("point ({0}, {1}) is outside the mesh")]
    PointOutside(f64, f64),

    #[error("boundary flux system did not converge (residual {0:e})")]
    FluxSolveFailure(f64),
    #[error("boundary edge attributed to facet {facet}, but only {available} normals are known")]
    FacetAttributionMissing { facet: usize, available: usize },

    #[error("measure cannot be balanced: {0}")]
    UnbalanceableMeasure(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.4e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("a-priori bound violated: {0}")]
    AprioriBoundViolation(String),

    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Input-side failures: the data handed to us is not admissible.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnboundedBody
                | Error::EmptyInterior
                | Error::NegativeScale(_)
                | Error::DegenerateNormals(..)
                | Error::InvariantViolation(_)
                | Error::MeshPrecondition(_)
                | Error::UnbalanceableMeasure(_)
                | Error::Parse(_)
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("line {}, column {}: {}", e.line(), e.column(), e))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
