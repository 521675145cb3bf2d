//! Valid clusters and valid hierarchies.
//!
//! A cluster `c` is valid when every score inside it is tighter than every
//! score from one of its members to an outsider:
//!
//! ```text
//! gap(c) = min over x, y in c and z outside c of  margin(s(x, y), s(x, z))  >  ε
//! ```
//!
//! where `margin` is `inner - outer` for similarities and `outer - inner` for
//! dissimilarities. The triple minimum is evaluated through per-item
//! aggregates: for each `x` the loosest inner score and the tightest outer
//! score.

use serde::Serialize;

use crate::cluster::Cluster;
use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::matrix::PairMatrix;

/// Gap of one cluster and a triple `(x, y, z)` attaining it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidityReport {
    #[serde(serialize_with = "crate::io::serialize_cluster")]
    pub cluster: Cluster,
    /// `+∞` for the full item set.
    #[serde(serialize_with = "crate::io::serialize_gap")]
    pub gap: f64,
    /// Lexicographically smallest `(x, y, z)` attaining `gap`; `None` when
    /// the cluster has no outsiders.
    pub witness: Option<(usize, usize, usize)>,
}

impl ValidityReport {
    pub fn is_valid(&self, epsilon: f64) -> bool {
        self.gap > epsilon
    }
}

/// Validity gap of `c` against the full outside set.
pub fn cluster_gap(m: &PairMatrix, c: &Cluster) -> ValidityReport {
    assert_eq!(m.k(), c.capacity(), "cluster capacity must match the matrix");
    let o = m.orientation();
    let mut gap = f64::INFINITY;
    let mut per_item = Vec::with_capacity(c.len());
    for x in c.iter() {
        let row = m.row(x);
        let inner = c.iter().fold(o.tightest(), |acc, y| o.worst(acc, row[y]));
        let outer = c
            .complement_iter()
            .fold(o.loosest(), |acc, z| o.best(acc, row[z]));
        let g = o.margin(inner, outer);
        per_item.push((x, g));
        if g < gap {
            gap = g;
        }
    }
    if c.is_full() {
        return ValidityReport {
            cluster: c.clone(),
            gap: f64::INFINITY,
            witness: None,
        };
    }
    let witness = per_item
        .iter()
        .find(|&&(_, g)| g == gap)
        .and_then(|&(x, _)| {
            let row = m.row(x);
            c.iter().find_map(|y| {
                c.complement_iter()
                    .find(|&z| o.margin(row[y], row[z]) == gap)
                    .map(|z| (x, y, z))
            })
        });
    debug_assert!(witness.is_some());
    ValidityReport {
        cluster: c.clone(),
        gap,
        witness,
    }
}

pub fn is_valid_cluster(m: &PairMatrix, c: &Cluster, epsilon: f64) -> bool {
    cluster_gap(m, c).gap > epsilon
}

/// Gap of the strong condition: loosest score inside `c` against the
/// tightest score leaving `c`.
pub fn strong_gap(m: &PairMatrix, c: &Cluster) -> f64 {
    let o = m.orientation();
    let mut inner = o.tightest();
    let mut outer = o.loosest();
    for x in c.iter() {
        let row = m.row(x);
        for y in c.iter() {
            inner = o.worst(inner, row[y]);
        }
        for z in c.complement_iter() {
            outer = o.best(outer, row[z]);
        }
    }
    o.margin(inner, outer)
}

fn check_dims(m: &PairMatrix, h: &Hierarchy) -> Result<()> {
    if m.k() != h.k() {
        return Err(Error::DimensionMismatch {
            left: m.k(),
            right: h.k(),
        });
    }
    Ok(())
}

/// Loosest inner score per item, refined bottom-up. Calls `visit` on every
/// vertex once the aggregates of its members describe that vertex.
fn walk_inner_aggregates<F>(m: &PairMatrix, h: &Hierarchy, mut visit: F)
where
    F: FnMut(usize, &[f64]),
{
    let o = m.orientation();
    let mut inner: Vec<f64> = (0..m.k()).map(|x| m.get(x, x)).collect();
    for v in h.postorder() {
        let ch = h.children(v);
        for (i, &a) in ch.iter().enumerate() {
            for &b in &ch[i + 1..] {
                for x in h.cluster(a).iter() {
                    let row = m.row(x);
                    for y in h.cluster(b).iter() {
                        let s = row[y];
                        inner[x] = o.worst(inner[x], s);
                        inner[y] = o.worst(inner[y], s);
                    }
                }
            }
        }
        visit(v, &inner);
    }
}

/// Full-outside-set gap of every vertex, indexed by vertex id.
///
/// Inner aggregates are reused from the children, so the inner side costs
/// `O(k²)` over the whole tree.
pub fn vertex_gaps(m: &PairMatrix, h: &Hierarchy) -> Result<Vec<f64>> {
    check_dims(m, h)?;
    let o = m.orientation();
    let mut gaps = vec![f64::INFINITY; h.len()];
    walk_inner_aggregates(m, h, |v, inner| {
        let c = h.cluster(v);
        if c.is_full() {
            return;
        }
        let mut gap = f64::INFINITY;
        for x in c.iter() {
            let row = m.row(x);
            let outer = c
                .complement_iter()
                .fold(o.loosest(), |acc, z| o.best(acc, row[z]));
            gap = gap.min(o.margin(inner[x], outer));
        }
        gaps[v] = gap;
    });
    Ok(gaps)
}

/// Gap of every vertex with outsiders restricted to `parent(t) \ t`.
/// The root gets `+∞`.
pub fn parent_restricted_gaps(m: &PairMatrix, h: &Hierarchy) -> Result<Vec<f64>> {
    check_dims(m, h)?;
    let o = m.orientation();
    let mut gaps = vec![f64::INFINITY; h.len()];
    walk_inner_aggregates(m, h, |v, inner| {
        let Some(p) = h.parent(v) else { return };
        let c = h.cluster(v);
        let siblings: Vec<usize> = h
            .cluster(p)
            .iter()
            .filter(|&z| !c.contains(z))
            .collect();
        let mut gap = f64::INFINITY;
        for x in c.iter() {
            let row = m.row(x);
            let outer = siblings
                .iter()
                .fold(o.loosest(), |acc, &z| o.best(acc, row[z]));
            gap = gap.min(o.margin(inner[x], outer));
        }
        gaps[v] = gap;
    });
    Ok(gaps)
}

/// Whole-tree verdict, evaluated with parent-restricted outside sets
/// (`O(k²)` overall). Equivalent to checking every vertex against its full
/// outside set.
pub fn is_valid_hierarchy(m: &PairMatrix, h: &Hierarchy, epsilon: f64) -> Result<bool> {
    Ok(parent_restricted_gaps(m, h)?.iter().all(|&g| g > epsilon))
}

/// Whole-tree verdict with every vertex checked against its full outside set.
pub fn is_valid_hierarchy_full(m: &PairMatrix, h: &Hierarchy, epsilon: f64) -> Result<bool> {
    Ok(vertex_gaps(m, h)?.iter().all(|&g| g > epsilon))
}

#[derive(Clone, Debug, Serialize)]
pub struct HierarchyReport {
    pub valid: bool,
    pub epsilon: f64,
    /// One report per vertex, in the hierarchy's preorder.
    pub vertices: Vec<ValidityReport>,
}

impl HierarchyReport {
    pub fn failing(&self) -> impl Iterator<Item = &ValidityReport> {
        let eps = self.epsilon;
        self.vertices.iter().filter(move |r| !r.is_valid(eps))
    }
}

/// Per-vertex reports against full outside sets, plus the overall verdict.
pub fn validate_hierarchy(m: &PairMatrix, h: &Hierarchy, epsilon: f64) -> Result<HierarchyReport> {
    check_dims(m, h)?;
    let vertices: Vec<ValidityReport> = h.clusters().iter().map(|c| cluster_gap(m, c)).collect();
    let valid = vertices.iter().all(|r| r.is_valid(epsilon));
    Ok(HierarchyReport {
        valid,
        epsilon,
        vertices,
    })
}

pub fn is_strongly_valid_hierarchy(m: &PairMatrix, h: &Hierarchy, epsilon: f64) -> Result<bool> {
    check_dims(m, h)?;
    Ok(h.clusters().iter().all(|c| strong_gap(m, c) > epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::fixtures::*;
    use crate::matrix::Orientation;

    fn c(k: usize, xs: &[usize]) -> Cluster {
        Cluster::from_indices(k, xs.iter().copied()).unwrap()
    }

    /// Direct triple minimum, cubic.
    fn brute_gap(m: &PairMatrix, cl: &Cluster) -> f64 {
        let o = m.orientation();
        let mut gap = f64::INFINITY;
        for x in cl.iter() {
            for y in cl.iter() {
                for z in cl.complement_iter() {
                    gap = gap.min(o.margin(m.get(x, y), m.get(x, z)));
                }
            }
        }
        gap
    }

    #[test]
    fn nested_similarity_gaps() {
        let m = nested_similarity();
        let r = cluster_gap(&m, &c(5, &[0, 1, 2]));
        assert_eq!(r.gap, 1.0);
        assert!(r.is_valid(0.0));
        let r = cluster_gap(&m, &c(5, &[0, 1]));
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.witness, Some((0, 1, 2)));
        assert!(!r.is_valid(0.0));
    }

    #[test]
    fn full_set_has_infinite_gap() {
        let m = nested_similarity();
        let r = cluster_gap(&m, &Cluster::full(5));
        assert_eq!(r.gap, f64::INFINITY);
        assert_eq!(r.witness, None);
    }

    #[test]
    fn singletons_and_full_set_are_valid() {
        for m in [nested_similarity(), two_pair_dissimilarity()] {
            for i in 0..m.k() {
                assert!(is_valid_cluster(&m, &Cluster::singleton(m.k(), i), 0.0));
            }
            assert!(is_valid_cluster(&m, &Cluster::full(m.k()), 0.0));
        }
    }

    #[test]
    fn two_pair_dissimilarity_four_items_are_valid() {
        let m = two_pair_dissimilarity();
        let r = cluster_gap(&m, &c(5, &[0, 1, 2, 3]));
        // internal max 15 against external min 21
        assert_eq!(r.gap, 6.0);
        assert_eq!(r.witness, Some((2, 0, 4)));
    }

    #[test]
    fn nested_similarity_hierarchies() {
        let m = nested_similarity();
        let t2 = Hierarchy::from_clusters(5, [c(5, &[0, 1, 2]), c(5, &[3, 4])]).unwrap();
        let t3 = Hierarchy::from_clusters(5, [c(5, &[0, 1]), c(5, &[2, 3, 4])]).unwrap();
        assert!(is_valid_hierarchy(&m, &t2, 0.0).unwrap());
        assert!(!is_valid_hierarchy(&m, &t3, 0.0).unwrap());
        let report = validate_hierarchy(&m, &t3, 0.0).unwrap();
        assert!(!report.valid);
        let failing: Vec<_> = report.failing().collect();
        assert_eq!(failing.len(), 2);
        assert_eq!(failing[0].cluster, c(5, &[0, 1]));
        assert_eq!(failing[0].gap, 0.0);
        assert!(is_valid_hierarchy(&m, &Hierarchy::star(5), 0.0).unwrap());
    }

    #[test]
    fn strong_validity_example() {
        let rows = [
            [6.0, 5.0, 1.0, 1.0],
            [5.0, 6.0, 1.0, 1.0],
            [1.0, 1.0, 6.0, 4.0],
            [1.0, 1.0, 4.0, 6.0],
        ];
        let m = PairMatrix::from_dense(4, rows.concat(), Orientation::Similarity, None).unwrap();
        let h = Hierarchy::from_clusters(4, [c(4, &[0, 1]), c(4, &[2, 3])]).unwrap();
        // min inside {0,1} is 5, max leaving is 1; min inside {2,3} is 4
        assert_eq!(strong_gap(&m, &c(4, &[0, 1])), 4.0);
        assert_eq!(strong_gap(&m, &c(4, &[2, 3])), 3.0);
        assert!(is_strongly_valid_hierarchy(&m, &h, 0.0).unwrap());
        assert!(is_valid_hierarchy(&m, &h, 0.0).unwrap());
        assert!(is_strongly_valid_hierarchy(&m, &Hierarchy::star(4), 0.0).unwrap());
    }

    #[test]
    fn strong_is_stricter_than_plain() {
        // {0,1,2} is valid but its loosest inner score 2 ties with an outer score
        let rows = [
            [9.0, 5.0, 2.0, 1.0],
            [5.0, 9.0, 5.0, 2.0],
            [2.0, 5.0, 9.0, 1.0],
            [1.0, 2.0, 1.0, 9.0],
        ];
        let m = PairMatrix::from_dense(4, rows.concat(), Orientation::Similarity, None).unwrap();
        let cl = c(4, &[0, 1, 2]);
        assert!(cluster_gap(&m, &cl).gap > 0.0);
        assert!(strong_gap(&m, &cl) <= 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let m = nested_similarity();
        assert!(matches!(
            is_valid_hierarchy(&m, &Hierarchy::star(4), 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(is_strongly_valid_hierarchy(&m, &Hierarchy::star(3), 0.0).is_err());
    }

    #[test]
    fn aggregates_match_brute_force_on_fixtures() {
        for m in [nested_similarity(), two_pair_dissimilarity()] {
            let h = Hierarchy::from_clusters(5, [c(5, &[0, 1]), c(5, &[0, 1, 2]), c(5, &[3, 4])]).unwrap();
            let gaps = vertex_gaps(&m, &h).unwrap();
            for (v, cl) in h.clusters().iter().enumerate() {
                assert_eq!(gaps[v], brute_gap(&m, cl), "{cl}");
                assert_eq!(cluster_gap(&m, cl).gap, brute_gap(&m, cl));
            }
        }
    }

    #[test]
    fn epsilon_margin() {
        let m = nested_similarity();
        let cl = c(5, &[0, 1, 2]);
        assert!(is_valid_cluster(&m, &cl, 0.5));
        assert!(!is_valid_cluster(&m, &cl, 1.0));
    }
}
