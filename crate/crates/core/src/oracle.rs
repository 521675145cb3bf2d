//! Exhaustive ground truth and counterexample search.
//!
//! The finest valid hierarchy is the family of *all* valid clusters. The
//! oracle finds it by testing every subset, which is only feasible for small
//! item counts; the cap guards against accidental `2^k` blow-ups.

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::Cluster;
use crate::error::{Error, Result};
use crate::hierarchy::Hierarchy;
use crate::linkage::LinkageRule;
use crate::matrix::{Orientation, PairMatrix};
use crate::prune::trimmed_linkage;
use crate::random::{random_matrix, trial_rng};

pub const DEFAULT_CAP: usize = 20;

// Masks are u64 and the enumeration is exponential; anything near this is
// already out of reach.
const HARD_CAP: usize = 40;

fn mask_is_valid(m: &PairMatrix, mask: u64, epsilon: f64) -> bool {
    let k = m.k();
    let o = m.orientation();
    let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let outside = full & !mask;
    let mut rest = mask;
    while rest != 0 {
        let x = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let row = m.row(x);
        let mut inner = o.tightest();
        let mut ys = mask;
        while ys != 0 {
            let y = ys.trailing_zeros() as usize;
            ys &= ys - 1;
            inner = o.worst(inner, row[y]);
        }
        let mut zs = outside;
        while zs != 0 {
            let z = zs.trailing_zeros() as usize;
            zs &= zs - 1;
            if o.margin(inner, row[z]) <= epsilon {
                return false;
            }
        }
    }
    true
}

/// Every ε-valid cluster, including the singletons and the full set.
///
/// Subsets are visited by increasing cardinality (Gosper's hack), and each
/// test stops at the first violating `(x, z)` pair.
pub fn valid_clusters(m: &PairMatrix, epsilon: f64, cap: usize) -> Result<Vec<Cluster>> {
    let k = m.k();
    let cap = cap.min(HARD_CAP);
    if k > cap {
        return Err(Error::TooLarge { k, cap });
    }
    let mut found: Vec<Cluster> = (0..k).map(|i| Cluster::singleton(k, i)).collect();
    for size in 2..k {
        let mut mask: u64 = (1u64 << size) - 1;
        let limit = 1u64 << k;
        while mask < limit {
            if mask_is_valid(m, mask, epsilon) {
                found.push(Cluster::from_mask(k, mask));
            }
            let low = mask & mask.wrapping_neg();
            let ripple = mask + low;
            mask = (((ripple ^ mask) >> 2) / low) | ripple;
        }
    }
    if k > 1 {
        found.push(Cluster::full(k));
    }
    Ok(found)
}

/// The finest valid hierarchy: all ε-valid clusters, with the default cap.
pub fn finest_valid_hierarchy(m: &PairMatrix, epsilon: f64) -> Result<Hierarchy> {
    finest_valid_hierarchy_capped(m, epsilon, DEFAULT_CAP)
}

pub fn finest_valid_hierarchy_capped(m: &PairMatrix, epsilon: f64, cap: usize) -> Result<Hierarchy> {
    let clusters = valid_clusters(m, epsilon, cap)?;
    Hierarchy::from_clusters(m.k(), clusters)
}

/// True iff no valid cluster is missing from `h`, i.e. `h` is the finest
/// valid hierarchy.
pub fn maximality_check(m: &PairMatrix, h: &Hierarchy, epsilon: f64) -> Result<bool> {
    if m.k() != h.k() {
        return Err(Error::DimensionMismatch {
            left: m.k(),
            right: h.k(),
        });
    }
    Ok(*h == finest_valid_hierarchy(m, epsilon)?)
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub rule: LinkageRule,
    pub orientation: Orientation,
    pub k_min: usize,
    pub k_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl SearchConfig {
    pub fn new(rule: LinkageRule, orientation: Orientation) -> Self {
        SearchConfig {
            rule,
            orientation,
            k_min: 4,
            k_max: 8,
            trials: 5000,
            seed: 0,
            epsilon: 0.0,
            jobs: None,
        }
    }
}

/// A matrix on which a trimmed linkage misses valid clusters.
#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub rule: String,
    pub orientation: Orientation,
    pub seed: u64,
    /// Zero-based index of the trial that produced the matrix.
    pub trial: usize,
    pub trials_used: usize,
    pub epsilon: f64,
    #[serde(skip)]
    pub matrix: PairMatrix,
    #[serde(serialize_with = "crate::io::serialize_clusters")]
    pub missing: Vec<Cluster>,
}

impl CounterexampleReport {
    /// Re-runs both sides on the stored matrix and checks the same clusters
    /// are missing.
    pub fn replay(&self, rule: &LinkageRule) -> Result<bool> {
        let (_, missing) = compare(&self.matrix, rule, self.epsilon)?;
        Ok(!missing.is_empty() && missing == self.missing)
    }

    /// JSON document that doubles as a matrix file (`labels`, `orientation`,
    /// `matrix`) for replay.
    pub fn to_json(&self) -> serde_json::Value {
        let mut doc = crate::io::matrix_to_json(&self.matrix);
        let extra = serde_json::to_value(self).expect("report serializes");
        if let (Some(doc), serde_json::Value::Object(extra)) = (doc.as_object_mut(), extra) {
            doc.extend(extra);
        }
        doc
    }
}

/// Valid clusters absent from the trimmed linkage output, in canonical order.
fn compare(m: &PairMatrix, rule: &LinkageRule, epsilon: f64) -> Result<(Hierarchy, Vec<Cluster>)> {
    let finest = finest_valid_hierarchy(m, epsilon)?;
    let trimmed = trimmed_linkage(m, rule, epsilon)?;
    let missing = finest
        .clusters()
        .iter()
        .filter(|c| !trimmed.has_cluster(c))
        .cloned()
        .collect();
    Ok((trimmed, missing))
}

/// Samples random distinct-entry matrices until trimmed linkage under
/// `rule` disagrees with the oracle. The lowest failing trial index is
/// reported regardless of thread count.
pub fn search_counterexample(cfg: &SearchConfig) -> Result<Option<CounterexampleReport>> {
    cfg.rule.check_orientation(cfg.orientation)?;
    if cfg.k_min < 1 || cfg.k_min > cfg.k_max {
        return Err(Error::InvalidParameter(format!(
            "bad size range {}..{}",
            cfg.k_min, cfg.k_max
        )));
    }
    if cfg.k_max > DEFAULT_CAP {
        return Err(Error::TooLarge {
            k: cfg.k_max,
            cap: DEFAULT_CAP,
        });
    }
    let run = || {
        (0..cfg.trials).into_par_iter().find_map_first(|trial| {
            let mut rng = trial_rng(cfg.seed, trial as u64);
            let k = rand::Rng::random_range(&mut rng, cfg.k_min..=cfg.k_max);
            let m = random_matrix(&mut rng, k, cfg.orientation);
            match compare(&m, &cfg.rule, cfg.epsilon) {
                Ok((_, missing)) if missing.is_empty() => None,
                Ok((_, missing)) => Some(Ok(CounterexampleReport {
                    rule: cfg.rule.name(),
                    orientation: cfg.orientation,
                    seed: cfg.seed,
                    trial,
                    trials_used: trial + 1,
                    epsilon: cfg.epsilon,
                    matrix: m,
                    missing,
                })),
                Err(e) => Some(Err(e)),
            }
        })
    };
    let found = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(run),
        None => run(),
    };
    found.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::fixtures::*;

    fn c(k: usize, xs: &[usize]) -> Cluster {
        Cluster::from_indices(k, xs.iter().copied()).unwrap()
    }

    #[test]
    fn nested_similarity_finest_is_t2() {
        let t2 = Hierarchy::from_clusters(5, [c(5, &[0, 1, 2]), c(5, &[3, 4])]).unwrap();
        assert_eq!(finest_valid_hierarchy(&nested_similarity(), 0.0).unwrap(), t2);
    }

    #[test]
    fn two_pair_dissimilarity_finest() {
        let expected =
            Hierarchy::from_clusters(5, [c(5, &[0, 1]), c(5, &[2, 3]), c(5, &[0, 1, 2, 3])]).unwrap();
        assert_eq!(finest_valid_hierarchy(&two_pair_dissimilarity(), 0.0).unwrap(), expected);
    }

    #[test]
    fn constant_matrix_is_star() {
        let m = constant(7, 1.0, 2.0, Orientation::Similarity);
        assert_eq!(finest_valid_hierarchy(&m, 0.0).unwrap(), Hierarchy::star(7));
    }

    #[test]
    fn cap_is_enforced() {
        let m = constant(6, 1.0, 2.0, Orientation::Similarity);
        assert!(matches!(
            finest_valid_hierarchy_capped(&m, 0.0, 5),
            Err(Error::TooLarge { k: 6, cap: 5 })
        ));
    }

    #[test]
    fn maximality() {
        let m = nested_similarity();
        let t1 = Hierarchy::from_clusters(5, [c(5, &[0, 1, 2])]).unwrap();
        let t2 = Hierarchy::from_clusters(5, [c(5, &[0, 1, 2]), c(5, &[3, 4])]).unwrap();
        assert!(!maximality_check(&m, &t1, 0.0).unwrap());
        assert!(maximality_check(&m, &t2, 0.0).unwrap());
        let own = finest_valid_hierarchy(&two_pair_dissimilarity(), 0.0).unwrap();
        assert!(maximality_check(&two_pair_dissimilarity(), &own, 0.0).unwrap());
    }

    #[test]
    fn tiny_matrices() {
        let one = constant(1, 0.0, 1.0, Orientation::Similarity);
        assert_eq!(finest_valid_hierarchy(&one, 0.0).unwrap().len(), 1);
        let two = constant(2, 0.0, 1.0, Orientation::Similarity);
        assert_eq!(finest_valid_hierarchy(&two, 0.0).unwrap().len(), 3);
    }

    #[test]
    fn search_is_deterministic_across_thread_counts() {
        let mut cfg = SearchConfig::new(LinkageRule::Ward, Orientation::Dissimilarity);
        cfg.trials = 300;
        cfg.seed = 11;
        cfg.jobs = Some(1);
        let a = search_counterexample(&cfg).unwrap().map(|r| r.trial);
        cfg.jobs = Some(4);
        let b = search_counterexample(&cfg).unwrap().map(|r| r.trial);
        assert_eq!(a, b);
    }

    #[test]
    fn search_rejects_bad_config() {
        let mut cfg = SearchConfig::new(LinkageRule::Ward, Orientation::Similarity);
        assert!(search_counterexample(&cfg).is_err());
        cfg.orientation = Orientation::Dissimilarity;
        cfg.k_max = 30;
        assert!(matches!(search_counterexample(&cfg), Err(Error::TooLarge { .. })));
    }
}
