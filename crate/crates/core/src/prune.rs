//! Trimmed linkage: drop every vertex of a linkage trace whose validity gap
//! is not above `ε`.
//!
//! Surviving clusters are valid, hence pairwise nested or disjoint, so the
//! filter alone yields a hierarchy; no re-attachment is needed.

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, MergeTrace};
use crate::linkage::{run_linkage, LinkageRule};
use crate::matrix::PairMatrix;
use crate::validity::vertex_gaps;

/// Keeps the vertices of `h` whose full-outside-set gap exceeds `epsilon`.
pub fn trim_hierarchy(m: &PairMatrix, h: &Hierarchy, epsilon: f64) -> Result<Hierarchy> {
    let gaps = vertex_gaps(m, h)?;
    let keep = h
        .clusters()
        .iter()
        .zip(&gaps)
        .filter(|(_, &g)| g > epsilon)
        .map(|(c, _)| c.clone());
    Hierarchy::from_clusters(h.k(), keep)
}

pub fn trim(m: &PairMatrix, trace: &MergeTrace, epsilon: f64) -> Result<Hierarchy> {
    if m.k() != trace.hierarchy().k() {
        return Err(Error::DimensionMismatch {
            left: m.k(),
            right: trace.hierarchy().k(),
        });
    }
    trim_hierarchy(m, trace.hierarchy(), epsilon)
}

/// Linkage followed by trimming.
pub fn trimmed_linkage(m: &PairMatrix, rule: &LinkageRule, epsilon: f64) -> Result<Hierarchy> {
    let trace = run_linkage(m, rule)?;
    trim(m, &trace, epsilon)
}
