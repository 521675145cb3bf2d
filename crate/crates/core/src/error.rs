use thiserror::Error;

use crate::cluster::Cluster;
use crate::matrix::Orientation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("clusters must be non-empty")]
    EmptyCluster,

    #[error("item index {index} out of range for {k} items")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("clusters {0} and {1} properly overlap")]
    LaminarityViolation(Cluster, Cluster),

    #[error("item counts differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix has no rows")]
    EmptyMatrix,

    #[error("matrix row {row} has {found} entries, expected {expected}")]
    NotSquare {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("missing off-diagonal entry at ({x}, {y})")]
    MissingEntry { x: usize, y: usize },

    #[error("entry ({x}, {y}) is not finite")]
    NonFinite { x: usize, y: usize },

    #[error("matrix is not symmetric at ({x}, {y}): difference {delta}")]
    Asymmetric { x: usize, y: usize, delta: f64 },

    #[error("self-score of item {x} does not dominate its score with item {y}")]
    SelfDominanceViolation { x: usize, y: usize },

    #[error("{found} labels supplied for {expected} items")]
    LabelCount { expected: usize, found: usize },

    #[error("duplicate item label {0:?}")]
    DuplicateLabel(String),

    #[error("rule {rule} is only defined for {required} scores, not {requested}")]
    RuleOrientationMismatch {
        rule: String,
        required: Orientation,
        requested: Orientation,
    },

    #[error("custom rule is not symmetric in the merged pair: f{inputs:?} = {lhs} but swapped = {rhs}")]
    AsymmetricRule {
        inputs: (f64, f64, f64, usize, usize, usize),
        lhs: f64,
        rhs: f64,
    },

    #[error("update rule produced a non-finite score at merge {merge}")]
    NonFiniteScore { merge: usize },

    #[error("{k} items exceeds the exhaustive-search cap of {cap}")]
    TooLarge { k: usize, cap: usize },

    #[error("scores are not ultrametric at triple ({}, {}, {})", .0.0, .0.1, .0.2)]
    NotUltrametric((usize, usize, usize)),

    #[error("heights are not strictly monotone between {child} and its parent {parent}")]
    MonotonicityViolation { child: Cluster, parent: Cluster },

    #[error("unknown linkage rule {0:?}")]
    UnknownRule(String),

    #[error("unknown item label {0:?}")]
    UnknownLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("newick parse error at byte {pos}: {msg}")]
    Newick { pos: usize, msg: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
