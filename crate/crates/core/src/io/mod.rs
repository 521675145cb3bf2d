//! Reading and writing matrices and trees.
//!
//! * Matrices: dense square CSV (optional header row of labels, optional
//!   blank diagonal) and a JSON object with `labels`, `orientation` and
//!   `matrix`.
//! * Trees: Newick text and a JSON laminar-family document.

mod matrix_io;
mod newick;
mod tree_doc;

pub use matrix_io::{
    matrix_to_json, read_matrix, read_matrix_csv, read_matrix_json, write_matrix_csv, Header,
    MatrixDocument,
};
pub use newick::{
    dendrogram_to_newick, hierarchy_to_newick, parse_newick, trace_to_newick, ParsedNewick,
};
pub use tree_doc::{read_tree, ItemRef, TreeDocument, JSON_LAMINAR};

use serde::ser::SerializeSeq;
use serde::Serializer;

use crate::cluster::Cluster;

/// A cluster as its sorted member indices.
pub(crate) fn serialize_cluster<S: Serializer>(c: &Cluster, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(c.iter())
}

pub(crate) fn serialize_clusters<S: Serializer>(cs: &[Cluster], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(cs.len()))?;
    for c in cs {
        seq.serialize_element(&c.to_vec())?;
    }
    seq.end()
}

/// Finite gaps as numbers; infinite gaps (the full set) as `null`.
pub(crate) fn serialize_gap<S: Serializer>(g: &f64, s: S) -> Result<S::Ok, S::Error> {
    if g.is_finite() {
        s.serialize_f64(*g)
    } else {
        s.serialize_none()
    }
}
