//! Ground metrics over class labels.
//!
//! Three constructions are supported: shortest-path distances on a
//! weighted label tree, two-level block distances over a partition of the
//! labels, and explicit matrices read from a file. All of them produce a
//! validated [`GroundMetric`].

mod block;
mod ground;
mod io;
mod tree;

use thiserror::Error;

pub use block::{block_metric, BlockPartition};
pub use ground::GroundMetric;
pub use io::{load_metric_file, load_metric_matrix, parse_metric_spec, MetricSpec};
pub use tree::{tree_metric, tree_metric_for, LabelTree, TreeNode, VIRTUAL_ROOT_ID};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric has no classes")]
    Empty,
    #[error("{labels} labels for a {size}x{size} matrix")]
    LabelCount { labels: usize, size: usize },
    #[error("duplicate class label `{0}`")]
    DuplicateLabel(String),
    #[error("row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("entry ({i},{j}) = {value} is negative or not finite")]
    InvalidEntry { i: usize, j: usize, value: f64 },
    #[error("diagonal entry for `{label}` (index {index}) is {value}, expected 0")]
    NonZeroDiagonal { index: usize, label: String, value: f64 },
    #[error("asymmetric entries ({i},{j}) = {forward} vs ({j},{i}) = {backward}")]
    Asymmetric {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    #[error("distinct classes `{a}` and `{b}` (indices {i},{j}) have zero distance")]
    ZeroOffDiagonal { i: usize, j: usize, a: String, b: String },
    #[error(
        "triangle inequality violated: d({a},{b}) = {direct} > d({a},{via}) + d({via},{b}) = {detour} \
         (indices {i},{j} via {k})"
    )]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        a: String,
        b: String,
        via: String,
        direct: f64,
        detour: f64,
    },
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("duplicate tree node id `{0}`")]
    DuplicateNode(String),
    #[error("node `{node}` names unknown parent `{parent}`")]
    UnknownParent { node: String, parent: String },
    #[error("node `{0}` is not connected to the root (cycle in parent links)")]
    Disconnected(String),
    #[error("class `{0}` is carried by more than one tree node")]
    DuplicateClass(String),
    #[error("class `{0}` has no node in the label tree")]
    MissingClass(String),
    #[error("node at depth {depth} has no layer weight ({available} given)")]
    MissingLayerWeight { depth: usize, available: usize },
    #[error("layer weights must be positive and non-increasing with depth: {0:?}")]
    InvalidLayerWeights(Vec<f64>),
    #[error("label tree carries no class labels")]
    NoClasses,
    #[error("label `{0}` appears in more than one cell")]
    OverlappingCells(String),
    #[error("partition contains an empty cell")]
    EmptyCell,
    #[error("block distances must satisfy 0 < within < between, got within={within} between={between}")]
    InvalidBlockDistances { within: f64, between: f64 },
    #[error("malformed metric file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
