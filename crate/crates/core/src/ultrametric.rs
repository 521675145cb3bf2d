//! Ultrametric score tables and their dendrograms.
//!
//! A score table is ultrametric when, in every triple, the loosest score
//! occurs at least twice. Such tables correspond one-to-one with dendrograms:
//! hierarchies with heights that strictly loosen towards the root, where the
//! score of two items is the height of their least common ancestor.

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, VertexId};
use crate::matrix::{Orientation, PairMatrix};

/// A hierarchy with a height per vertex.
///
/// Internal vertices always carry a height; leaves may. Along every
/// parent-child edge the child is strictly tighter than the parent.
#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram {
    hierarchy: Hierarchy,
    heights: Vec<Option<f64>>,
    orientation: Orientation,
}

impl Dendrogram {
    /// `heights` is indexed by vertex id.
    pub fn new(hierarchy: Hierarchy, heights: Vec<Option<f64>>, orientation: Orientation) -> Result<Self> {
        if heights.len() != hierarchy.len() {
            return Err(Error::DimensionMismatch {
                left: hierarchy.len(),
                right: heights.len(),
            });
        }
        for (v, h) in heights.iter().enumerate() {
            match h {
                None if !hierarchy.is_leaf(v) => {
                    return Err(Error::InvalidParameter(format!(
                        "internal vertex {} has no height",
                        hierarchy.cluster(v)
                    )))
                }
                Some(x) if !x.is_finite() => {
                    return Err(Error::InvalidParameter(format!(
                        "vertex {} has non-finite height",
                        hierarchy.cluster(v)
                    )))
                }
                _ => {}
            }
        }
        for v in 0..hierarchy.len() {
            let Some(p) = hierarchy.parent(v) else { continue };
            if let (Some(hc), Some(hp)) = (heights[v], heights[p]) {
                if !orientation.better(hc, hp) {
                    return Err(Error::MonotonicityViolation {
                        child: hierarchy.cluster(v).clone(),
                        parent: hierarchy.cluster(p).clone(),
                    });
                }
            }
        }
        Ok(Dendrogram {
            hierarchy,
            heights,
            orientation,
        })
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn height(&self, v: VertexId) -> Option<f64> {
        self.heights[v]
    }

    pub fn heights(&self) -> &[Option<f64>] {
        &self.heights
    }

    /// Height of the least common ancestor of `x` and `y`.
    pub fn score(&self, x: usize, y: usize) -> Option<f64> {
        self.heights[self.hierarchy.lca_vertex(x, y)]
    }
}

/// The first triple `(x, y, z)`, with `x < y` and in lexicographic order,
/// where `s(x, y)` is strictly looser than both `s(x, z)` and `s(y, z)`.
pub fn ultrametric_violation(m: &PairMatrix) -> Option<(usize, usize, usize)> {
    ultrametric_violation_within(m, 0.0)
}

/// As [`ultrametric_violation`], but `s(x, y)` may be up to `tolerance`
/// looser than the tighter-bound without counting as a violation.
pub fn ultrametric_violation_within(m: &PairMatrix, tolerance: f64) -> Option<(usize, usize, usize)> {
    let k = m.k();
    let o = m.orientation();
    for x in 0..k {
        let rx = m.row(x);
        for y in (x + 1)..k {
            let ry = m.row(y);
            for z in 0..k {
                if z == x || z == y {
                    continue;
                }
                let bound = o.worst(rx[z], ry[z]);
                if o.margin(bound, rx[y]) > tolerance {
                    return Some((x, y, z));
                }
            }
        }
    }
    None
}

pub fn is_ultrametric(m: &PairMatrix) -> bool {
    ultrametric_violation(m).is_none()
}

/// The dendrogram whose induced scores are `m`. Leaves carry the diagonal.
pub fn dendrogram_from_ultrametric(m: &PairMatrix) -> Result<Dendrogram> {
    dendrogram_from_ultrametric_within(m, 0.0)
}

/// As [`dendrogram_from_ultrametric`], grouping scores into one level while
/// each stays within `tolerance` of the level's tightest score.
pub fn dendrogram_from_ultrametric_within(m: &PairMatrix, tolerance: f64) -> Result<Dendrogram> {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::InvalidParameter(format!("negative tolerance {tolerance}")));
    }
    if let Some(triple) = ultrametric_violation_within(m, tolerance) {
        return Err(Error::NotUltrametric(triple));
    }
    let k = m.k();
    let o = m.orientation();
    let mut pairs: Vec<(usize, usize)> = (0..k).flat_map(|x| ((x + 1)..k).map(move |y| (x, y))).collect();
    pairs.sort_by(|&(a, b), &(c, d)| {
        let (p, q) = (m.get(a, b), m.get(c, d));
        if o.better(p, q) {
            std::cmp::Ordering::Less
        } else if o.better(q, p) {
            std::cmp::Ordering::Greater
        } else {
            (a, b).cmp(&(c, d))
        }
    });

    let mut uf = UnionFind::new(k);
    let mut born = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let level = m.get(pairs[i].0, pairs[i].1);
        let mut j = i;
        while j < pairs.len() && o.margin(level, m.get(pairs[j].0, pairs[j].1)).abs() <= tolerance {
            j += 1;
        }
        let mut touched = Vec::new();
        for &(x, y) in &pairs[i..j] {
            if uf.union(x, y) {
                touched.push(x);
            }
        }
        let mut roots: Vec<usize> = touched.into_iter().map(|x| uf.find(x)).collect();
        roots.sort_unstable();
        roots.dedup();
        for r in roots {
            born.push((uf.members(r), level));
        }
        i = j;
    }

    let clusters = born
        .iter()
        .map(|(members, _)| crate::cluster::Cluster::from_indices(k, members.iter().copied()))
        .collect::<Result<Vec<_>>>()?;
    let hierarchy = Hierarchy::from_clusters(k, clusters.iter().cloned())?;
    let mut heights = vec![None; hierarchy.len()];
    for (c, (_, level)) in clusters.iter().zip(&born) {
        heights[hierarchy.vertex_of(c).expect("cluster is a vertex")] = Some(*level);
    }
    for x in 0..k {
        heights[hierarchy.leaf(x)] = Some(m.get(x, x));
    }
    if k == 1 {
        heights[0] = Some(m.get(0, 0));
    }
    Dendrogram::new(hierarchy, heights, o)
}

/// The score table induced by `d`. The diagonal sits one unit tighter than
/// the tightest internal height.
pub fn ultrametric_from_dendrogram(d: &Dendrogram) -> PairMatrix {
    let h = d.hierarchy();
    let k = h.k();
    let o = d.orientation();
    let extreme = h
        .internal_vertices()
        .filter_map(|v| d.height(v))
        .fold(o.loosest(), |a, b| o.best(a, b));
    let diagonal = if extreme.is_finite() {
        match o {
            Orientation::Similarity => extreme + 1.0,
            Orientation::Dissimilarity => extreme - 1.0,
        }
    } else {
        0.0
    };
    let mut scores = vec![diagonal; k * k];
    for x in 0..k {
        for y in (x + 1)..k {
            let s = d.score(x, y).expect("internal vertices carry heights");
            scores[x * k + y] = s;
            scores[y * k + x] = s;
        }
    }
    PairMatrix::from_dense(k, scores, o, None).expect("dendrogram scores form a valid matrix")
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(k: usize) -> Self {
        UnionFind {
            parent: (0..k).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    fn members(&mut self, r: usize) -> Vec<usize> {
        (0..self.parent.len()).filter(|&x| self.find(x) == r).collect()
    }
}
