//! Finest valid hierarchies of pairwise score tables.
//!
//! A cluster is *valid* when every score inside it is strictly tighter than
//! every score from one of its members to an outsider. The valid clusters of
//! any table form a laminar family, so they assemble into a single finest
//! valid hierarchy. This crate computes it:
//!
//! * exhaustively, for small tables ([`oracle`]);
//! * by agglomerative linkage followed by a trimming pass ([`linkage`],
//!   [`prune`]), which recovers it exactly for single, complete and both
//!   average linkages;
//! * directly, for ultrametric tables ([`ultrametric`]).
//!
//! [`conditions`] checks update rules for the properties that make trimmed
//! linkage exact.

pub mod cluster;
pub mod conditions;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod linkage;
pub mod matrix;
pub mod oracle;
pub mod prune;
pub mod random;
pub mod ultrametric;
pub mod validity;

pub use cluster::Cluster;
pub use error::{Error, Result};
pub use hierarchy::{contains, Hierarchy, Merge, MergeTrace, VertexId};
pub use linkage::{apply_rule, run_linkage, CustomRule, LinkageRule, LwCoeffs, LwCoefficients};
pub use matrix::{Orientation, PairMatrix};
pub use oracle::{finest_valid_hierarchy, maximality_check, search_counterexample, CounterexampleReport, SearchConfig};
pub use prune::{trim, trimmed_linkage};
pub use ultrametric::{dendrogram_from_ultrametric, is_ultrametric, ultrametric_from_dendrogram, Dendrogram};
pub use validity::{cluster_gap, is_valid_cluster, is_valid_hierarchy, ValidityReport};
