//! Rooted set-trees over `k` items, represented as laminar families.
//!
//! A [`Hierarchy`] always contains every singleton and the full item set.
//! Vertices are stored in canonical preorder (children sorted by their
//! smallest member), so two hierarchies with the same cluster set are
//! structurally identical.

use std::collections::HashMap;

use crate::cluster::Cluster;
use crate::error::{Error, Result};

/// Index of a vertex inside a [`Hierarchy`]. The root is always vertex 0.
pub type VertexId = usize;

#[derive(Clone, Debug)]
pub struct Hierarchy {
    k: usize,
    clusters: Vec<Cluster>,
    parent: Vec<Option<VertexId>>,
    children: Vec<Vec<VertexId>>,
    leaf: Vec<VertexId>,
    index: HashMap<Cluster, VertexId>,
}

impl Hierarchy {
    /// Builds the hierarchy generated by `clusters`, adding the singletons and
    /// the full set. Fails if two clusters properly overlap.
    pub fn from_clusters<I>(k: usize, clusters: I) -> Result<Self>
    where
        I: IntoIterator<Item = Cluster>,
    {
        if k == 0 {
            return Err(Error::EmptyCluster);
        }
        let mut all: Vec<Cluster> = Vec::with_capacity(2 * k);
        for c in clusters {
            if c.capacity() != k {
                return Err(Error::DimensionMismatch {
                    left: k,
                    right: c.capacity(),
                });
            }
            all.push(c);
        }
        all.extend((0..k).map(|i| Cluster::singleton(k, i)));
        all.push(Cluster::full(k));
        all.sort();
        all.dedup();

        let sizes: Vec<usize> = all.iter().map(Cluster::len).collect();

        // Clusters containing each item, smallest first. Laminarity holds iff
        // every such chain is nested.
        let mut chains: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (id, c) in all.iter().enumerate() {
            for x in c.iter() {
                chains[x].push(id);
            }
        }
        let mut parent: Vec<Option<usize>> = vec![None; all.len()];
        for (x, chain) in chains.iter_mut().enumerate() {
            chain.sort_by_key(|&id| sizes[id]);
            for pair in chain.windows(2) {
                let (small, big) = (pair[0], pair[1]);
                if !all[small].is_subset(&all[big]) {
                    return Err(Error::LaminarityViolation(
                        all[small].clone(),
                        all[big].clone(),
                    ));
                }
                if all[small].min_member() == x {
                    parent[small] = Some(big);
                }
            }
        }

        let mut children: Vec<Vec<usize>> = vec![Vec::new(); all.len()];
        let mut root = None;
        for (id, p) in parent.iter().enumerate() {
            match p {
                Some(p) => children[*p].push(id),
                None => root = Some(id),
            }
        }
        let root = root.expect("the full set has no parent");

        // Re-number vertices in preorder with children sorted by smallest member.
        let mut order = Vec::with_capacity(all.len());
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            order.push(v);
            let ch = &mut children[v];
            ch.sort_by_key(|&c| all[c].min_member());
            stack.extend(ch.iter().rev());
        }
        let mut new_id = vec![0usize; all.len()];
        for (new, &old) in order.iter().enumerate() {
            new_id[old] = new;
        }
        let mut slots: Vec<Option<Cluster>> = all.into_iter().map(Some).collect();
        let clusters: Vec<Cluster> = order.iter().map(|&old| slots[old].take().unwrap()).collect();
        let parent = order
            .iter()
            .map(|&old| parent[old].map(|p| new_id[p]))
            .collect();
        let children = order
            .iter()
            .map(|&old| children[old].iter().map(|&c| new_id[c]).collect())
            .collect();
        let index: HashMap<Cluster, VertexId> = clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let leaf = (0..k).map(|i| index[&Cluster::singleton(k, i)]).collect();

        Ok(Hierarchy {
            k,
            clusters,
            parent,
            children,
            leaf,
            index,
        })
    }

    /// The hierarchy with only the singletons and the full set.
    pub fn star(k: usize) -> Self {
        Self::from_clusters(k, std::iter::empty()).expect("star tree is laminar")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Vertices in canonical preorder.
    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, v: VertexId) -> &Cluster {
        &self.clusters[v]
    }

    pub fn root(&self) -> VertexId {
        0
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v]
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.children[v].is_empty()
    }

    /// Vertex holding the singleton `{item}`.
    pub fn leaf(&self, item: usize) -> VertexId {
        self.leaf[item]
    }

    pub fn vertex_of(&self, c: &Cluster) -> Option<VertexId> {
        self.index.get(c).copied()
    }

    pub fn has_cluster(&self, c: &Cluster) -> bool {
        self.index.contains_key(c)
    }

    /// Vertices with at least one child, in preorder.
    pub fn internal_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.len()).filter(|&v| !self.is_leaf(v))
    }

    /// Vertices ordered so that every child precedes its parent.
    pub fn postorder(&self) -> Vec<VertexId> {
        // Reversed preorder lists every parent after all its descendants.
        (0..self.len()).rev().collect()
    }

    pub fn is_binary(&self) -> bool {
        self.internal_vertices().all(|v| self.children[v].len() == 2)
    }

    /// Containment order: true iff every cluster of `self` is a cluster of `other`.
    pub fn is_contained_in(&self, other: &Hierarchy) -> Result<bool> {
        if self.k != other.k {
            return Err(Error::DimensionMismatch {
                left: self.k,
                right: other.k,
            });
        }
        Ok(self.clusters.iter().all(|c| other.has_cluster(c)))
    }

    /// The hierarchy of clusters present in both.
    pub fn intersection(&self, other: &Hierarchy) -> Result<Hierarchy> {
        if self.k != other.k {
            return Err(Error::DimensionMismatch {
                left: self.k,
                right: other.k,
            });
        }
        let common = self
            .clusters
            .iter()
            .filter(|c| other.has_cluster(c))
            .cloned();
        Hierarchy::from_clusters(self.k, common)
    }

    /// Vertex of the smallest cluster containing both items.
    pub fn lca_vertex(&self, x: usize, y: usize) -> VertexId {
        let mut v = self.leaf[x];
        while !self.clusters[v].contains(y) {
            v = self.parent[v].expect("the root contains every item");
        }
        v
    }

    /// Smallest cluster containing both items.
    pub fn lca(&self, x: usize, y: usize) -> &Cluster {
        &self.clusters[self.lca_vertex(x, y)]
    }
}

impl PartialEq for Hierarchy {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.clusters == other.clusters
    }
}

impl Eq for Hierarchy {}

/// `a ⊆ b` in the containment order on hierarchies.
pub fn contains(a: &Hierarchy, b: &Hierarchy) -> Result<bool> {
    a.is_contained_in(b)
}

/// One agglomeration step of a linkage run.
#[derive(Clone, Debug, PartialEq)]
pub struct Merge {
    /// The merged cluster with the smaller smallest member.
    pub left: Cluster,
    pub right: Cluster,
    pub merged: Cluster,
    /// Score between `left` and `right` when they were selected.
    pub score: f64,
}

/// A binary hierarchy together with the order in which its internal
/// vertices were created.
#[derive(Clone, Debug)]
pub struct MergeTrace {
    hierarchy: Hierarchy,
    merges: Vec<Merge>,
    creation: Vec<Option<usize>>,
}

impl MergeTrace {
    /// Assembles a trace from `k - 1` merges listed in creation order.
    pub fn from_merges(k: usize, merges: Vec<Merge>) -> Result<Self> {
        if merges.len() + 1 != k {
            return Err(Error::InvalidParameter(format!(
                "a trace over {k} items needs {} merges, got {}",
                k.saturating_sub(1),
                merges.len()
            )));
        }
        let hierarchy = Hierarchy::from_clusters(k, merges.iter().map(|m| m.merged.clone()))?;
        if hierarchy.len() != 2 * k - 1 {
            return Err(Error::InvalidParameter(
                "merges do not form a binary hierarchy".into(),
            ));
        }
        let mut creation = vec![None; hierarchy.len()];
        for (m, merge) in merges.iter().enumerate() {
            if merge.left.intersects(&merge.right) || merge.left.union(&merge.right) != merge.merged {
                return Err(Error::InvalidParameter(format!(
                    "merge {} does not join two disjoint clusters",
                    m + 1
                )));
            }
            let v = hierarchy.vertex_of(&merge.merged).expect("merged cluster is a vertex");
            for child in [&merge.left, &merge.right] {
                let c = hierarchy.vertex_of(child).ok_or_else(|| {
                    Error::InvalidParameter(format!("merge {} uses unknown cluster {child}", m + 1))
                })?;
                if hierarchy.parent(c) != Some(v) {
                    return Err(Error::InvalidParameter(format!(
                        "merge {} joins {child} which is not a child of {}",
                        m + 1,
                        merge.merged
                    )));
                }
                if let Some(born) = creation[c] {
                    debug_assert!(born < m + 1);
                } else if !hierarchy.is_leaf(c) {
                    return Err(Error::InvalidParameter(format!(
                        "merge {} uses {child} before it was created",
                        m + 1
                    )));
                }
            }
            creation[v] = Some(m + 1);
        }
        Ok(MergeTrace {
            hierarchy,
            merges,
            creation,
        })
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn into_hierarchy(self) -> Hierarchy {
        self.hierarchy
    }

    /// Merges in creation order; merge `m` (1-based) is `merges()[m - 1]`.
    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// 1-based iteration at which an internal vertex was created; `None` for leaves.
    pub fn creation_index(&self, v: VertexId) -> Option<usize> {
        self.creation[v]
    }

    pub fn merge_score(&self, v: VertexId) -> Option<f64> {
        self.creation[v].map(|m| self.merges[m - 1].score)
    }
}
