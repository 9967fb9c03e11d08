use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while building or querying graphs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge ({u}, {v}) references a node outside 0..{n}")]
    NodeOutOfRange { u: usize, v: usize, n: usize },
    #[error("node {node} is outside 0..{n}")]
    InvalidNode { node: usize, n: usize },
    #[error("({u}, {v}) is not an edge of the graph")]
    MissingEdge { u: usize, v: usize },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("{what} requires n <= {max}, got n = {n}")]
    TooLarge {
        what: &'static str,
        n: usize,
        max: usize,
    },
    #[error("degenerate graph: {0}")]
    Degenerate(&'static str),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Errors raised by feature-space constructions (k-NN, projection, Delaunay).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("k = {k} must satisfy 1 <= k < N = {n}")]
    InvalidK { k: usize, n: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all {n} points are collinear; no triangulation exists")]
    Collinear { n: usize },
    #[error("feature matrix contains a non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("feature matrix has {rows} rows but {expected} were expected")]
    RowMismatch { rows: usize, expected: usize },
}

/// Errors raised by the autodiff tape and its primitives.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: (usize, usize) },
    #[error("tape was already consumed by a backward pass")]
    TapeConsumed,
    #[error("row index {index} out of range for {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Errors raised while loading, generating or splitting datasets.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {reason}")]
    Malformed {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("{file}:{line}: ragged row with {got} values, expected {expected}")]
    RaggedRow {
        file: String,
        line: usize,
        got: usize,
        expected: usize,
    },
    #[error("{file}:{line}: unknown node id {id:?}")]
    UnknownNode {
        file: String,
        line: usize,
        id: String,
    },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised by the triangle selector and the rewiring loop.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectorError {
    #[error("candidate triangle set is empty")]
    EmptyCandidates,
    #[error("dataset has a single class; triangle supervision is degenerate")]
    SingleClass,
    #[error("no candidate view is enabled")]
    NoViews,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged (non-finite loss at epoch {epoch})")]
    Diverged { epoch: usize },
}

/// Crate-wide error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
