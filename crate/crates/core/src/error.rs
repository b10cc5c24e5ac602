use thiserror::Error;

use crate::chains::CellId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no boundary of 0-chain")]
    ZeroChainBoundary,
    #[error("unknown cell {0}")]
    UnknownCell(CellId),
    #[error("co-boundary index {0} out of range 1..=3")]
    CoboundaryRange(usize),
    #[error("chain of dimension {chain} does not match matrix dimension {matrix}")]
    DimensionMismatch { chain: usize, matrix: usize },

    #[error("invalid foam graph: {0}")]
    InvalidGraph(String),
    #[error("reentrant strut '{0}': crosses the domain boundary more than once")]
    ReentrantStrut(String),
    #[error("strut '{strut}' crosses Dirichlet facet {facet}")]
    DirichletCrossing { strut: String, facet: String },
    #[error("fluid cell '{0}' has a non-closed window surface")]
    OpenCell(String),
    #[error("clipping failed: {0}")]
    Clipping(String),
    #[error("complex is not classified")]
    Unclassified,

    #[error("degenerate volume {0}")]
    DegenerateVolume(usize),
    #[error("degenerate edge {0}")]
    DegenerateEdge(usize),
    #[error("missing strut radius for edge {0}")]
    MissingRadius(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
    #[error("singular heat capacity at state {index}: {value:e} J/K")]
    SingularCapacity { index: usize, value: f64 },

    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("nothing to fit: trace is constant")]
    NothingToFit,
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("check failed: {0}")]
    Check(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for the command-line front end: 2 for bad input,
    /// 1 for numerical or validation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidGraph(_)
            | Error::InvalidMaterial(_)
            | Error::InvalidSpec(_)
            | Error::InvalidConfig(_)
            | Error::File { .. }
            | Error::Json { .. }
            | Error::Io(_)
            | Error::Parse(_) => 2,
            _ => 1,
        }
    }
}
