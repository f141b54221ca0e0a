use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("edge ({u}, {v}) out of range for {n} nodes")]
    NodeOutOfRange { u: usize, v: usize, n: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph disconnected")]
    Disconnected,
    #[error("tree count exceeds cap: graph has {count} spanning trees, cap is {cap}")]
    TooManyTrees { count: u128, cap: usize },
    #[error("graph with {n} nodes exceeds exact clique limit {limit}")]
    CliqueLimit { n: usize, limit: usize },
    #[error("no cover within cap {0}")]
    NoCover(usize),
    #[error("invalid spanning tree: {0}")]
    InvalidTree(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("alphabet too large for oracle: {0} > {1}")]
    AlphabetTooLarge(usize, usize),
    #[error("state space too large: {states} joint states exceed cap {cap}")]
    StateSpaceTooLarge { states: u128, cap: usize },
    #[error("linear program infeasible")]
    Infeasible,
    #[error("linear program unbounded")]
    Unbounded,
    #[error("enumeration infeasible: {0}")]
    EnumerationInfeasible(String),
    #[error("zero vector")]
    ZeroVector,
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("citation references unknown paper id {id:?} at {path}:{line}")]
    DanglingCitation { path: PathBuf, line: usize, id: String },
    #[error("insufficient nodes: {0}")]
    InsufficientNodes(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("training diverged at epoch {0}")]
    Diverged(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
