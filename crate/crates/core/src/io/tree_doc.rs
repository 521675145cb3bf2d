use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cluster::Cluster;
use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, MergeTrace};
use crate::matrix::Orientation;
use crate::ultrametric::Dendrogram;

pub const JSON_LAMINAR: &str = "json-laminar";

/// An item given either by index or by label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ItemRef {
    Index(usize),
    Label(String),
}

/// A hierarchy as an explicit laminar family, optionally annotated with a
/// gap or height per cluster.
///
/// Written documents list every cluster in canonical preorder, root first.
/// When reading, singletons and the full set may be omitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub format: String,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub clusters: Vec<Vec<ItemRef>>,
    /// Validity gap per cluster; `null` stands for an infinite gap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaps: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heights: Option<Vec<Option<f64>>>,
    /// For linkage traces: the 1-based merge that created each cluster.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creation: Option<Vec<Option<usize>>>,
    /// For linkage traces: the score at which each cluster was merged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge_scores: Option<Vec<Option<f64>>>,
}

impl TreeDocument {
    pub fn from_hierarchy(h: &Hierarchy, labels: Option<&[String]>) -> Self {
        TreeDocument {
            format: JSON_LAMINAR.to_owned(),
            k: h.k(),
            labels: labels.map(<[String]>::to_vec),
            clusters: h
                .clusters()
                .iter()
                .map(|c| c.iter().map(ItemRef::Index).collect())
                .collect(),
            gaps: None,
            orientation: None,
            heights: None,
            creation: None,
            merge_scores: None,
        }
    }

    pub fn from_trace(t: &MergeTrace, labels: Option<&[String]>) -> Self {
        let h = t.hierarchy();
        let mut doc = TreeDocument::from_hierarchy(h, labels);
        doc.creation = Some((0..h.len()).map(|v| t.creation_index(v)).collect());
        doc.merge_scores = Some((0..h.len()).map(|v| t.merge_score(v)).collect());
        doc
    }

    /// `gaps` is indexed by vertex, as returned by the validity module.
    pub fn with_gaps(mut self, gaps: &[f64]) -> Self {
        self.gaps = Some(gaps.iter().map(|&g| g.is_finite().then_some(g)).collect());
        self
    }

    pub fn from_dendrogram(d: &Dendrogram, labels: Option<&[String]>) -> Self {
        let mut doc = TreeDocument::from_hierarchy(d.hierarchy(), labels);
        doc.orientation = Some(d.orientation());
        doc.heights = Some(d.heights().to_vec());
        doc
    }

    /// The listed clusters, with labels resolved against the document's
    /// own labels, falling back to `labels`.
    fn resolve(&self, labels: Option<&[String]>) -> Result<Vec<Cluster>> {
        if self.format != JSON_LAMINAR {
            return Err(Error::Parse(format!("unknown tree format {:?}", self.format)));
        }
        let k = self.k;
        let names = self.labels.as_deref().or(labels);
        if let Some(n) = names {
            if n.len() != k {
                return Err(Error::LabelCount {
                    expected: k,
                    found: n.len(),
                });
            }
        }
        let index: HashMap<&str, usize> = names
            .unwrap_or_default()
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        self.clusters
            .iter()
            .map(|members| {
                let items = members
                    .iter()
                    .map(|r| match r {
                        ItemRef::Index(i) => Ok(*i),
                        ItemRef::Label(l) => index
                            .get(l.as_str())
                            .copied()
                            .ok_or_else(|| Error::UnknownLabel(l.clone())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Cluster::from_indices(k, items)
            })
            .collect()
    }

    pub fn to_hierarchy(&self, labels: Option<&[String]>) -> Result<Hierarchy> {
        Hierarchy::from_clusters(self.k, self.resolve(labels)?)
    }

    /// Rebuilds a dendrogram; requires `orientation` and `heights`.
    pub fn to_dendrogram(&self, labels: Option<&[String]>) -> Result<Dendrogram> {
        let clusters = self.resolve(labels)?;
        let h = Hierarchy::from_clusters(self.k, clusters.iter().cloned())?;
        let (Some(o), Some(hs)) = (self.orientation, &self.heights) else {
            return Err(Error::Parse("document carries no heights".into()));
        };
        if hs.len() != clusters.len() {
            return Err(Error::DimensionMismatch {
                left: clusters.len(),
                right: hs.len(),
            });
        }
        let mut heights = vec![None; h.len()];
        for (c, height) in clusters.iter().zip(hs) {
            heights[h.vertex_of(c).expect("listed cluster is a vertex")] = *height;
        }
        Dendrogram::new(h, heights, o)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree document serializes")
    }
}

/// Reads a tree from JSON laminar or Newick text, chosen by the first
/// non-blank character.
pub fn read_tree(text: &str, labels: &[String]) -> Result<Hierarchy> {
    if text.trim_start().starts_with('{') {
        let doc: TreeDocument = serde_json::from_str(text)?;
        if doc.k != labels.len() {
            return Err(Error::DimensionMismatch {
                left: labels.len(),
                right: doc.k,
            });
        }
        doc.to_hierarchy(Some(labels))
    } else {
        Ok(super::parse_newick(text, labels)?.hierarchy)
    }
}
