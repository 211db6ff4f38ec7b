use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty file")]
    EmptyFile,

    #[error("line {line}: negative node id {id}")]
    NegativeNodeId { line: usize, id: i64 },

    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("window {start},{length} out of range for {snapshots} snapshots")]
    WindowOutOfRange {
        start: usize,
        length: usize,
        snapshots: usize,
    },

    #[error("{0}")]
    EmptySegment(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix with {rows} rows exceeds the dense budget of {budget}")]
    DenseBudget { rows: usize, budget: usize },

    #[error("requested {k} eigenpairs from a matrix with {rows} rows ({bound})")]
    TooManyEigenpairs {
        k: usize,
        rows: usize,
        bound: &'static str,
    },

    #[error("trajectory of {elements} elements exceeds the capture budget of {budget}")]
    TrajectoryBudget { elements: usize, budget: usize },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("empty supra matrix: every layer of the window is edgeless")]
    EmptyMatrix,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("missing feature row for node {0}")]
    MissingFeature(usize),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
