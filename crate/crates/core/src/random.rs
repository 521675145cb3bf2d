//! Seeded random score matrices.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::Cluster;
use crate::hierarchy::Hierarchy;
use crate::matrix::{Orientation, PairMatrix};
use crate::ultrametric::Dendrogram;

/// Independent generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn diagonal(orientation: Orientation) -> f64 {
    match orientation {
        Orientation::Similarity => 3.0,
        Orientation::Dissimilarity => 0.0,
    }
}

fn assemble(k: usize, orientation: Orientation, mut draw: impl FnMut() -> f64) -> PairMatrix {
    let mut scores = vec![diagonal(orientation); k * k];
    for x in 0..k {
        for y in (x + 1)..k {
            let v = draw();
            scores[x * k + y] = v;
            scores[y * k + x] = v;
        }
    }
    PairMatrix::from_dense(k, scores, orientation, None).expect("generated matrix is valid")
}

/// Off-diagonal entries i.i.d. uniform on `[1, 2)`, all distinct; the
/// diagonal dominates (3 for similarities, 0 for dissimilarities).
pub fn random_matrix<R: Rng>(rng: &mut R, k: usize, orientation: Orientation) -> PairMatrix {
    let mut seen = HashSet::new();
    assemble(k, orientation, || loop {
        let v: f64 = rng.random_range(1.0..2.0);
        if seen.insert(v.to_bits()) {
            break v;
        }
    })
}

/// Off-diagonal entries drawn from `levels` evenly spaced values in `[1, 2)`,
/// so ties are frequent.
pub fn random_matrix_with_ties<R: Rng>(
    rng: &mut R,
    k: usize,
    orientation: Orientation,
    levels: u32,
) -> PairMatrix {
    assert!(levels > 0);
    assemble(k, orientation, || {
        1.0 + rng.random_range(0..levels) as f64 / levels as f64
    })
}

/// A random hierarchy: groups of two or three active clusters are merged
/// until one remains, then each non-root merge is kept with probability 1/2.
pub fn random_hierarchy<R: Rng>(rng: &mut R, k: usize) -> Hierarchy {
    let mut active: Vec<Cluster> = (0..k).map(|i| Cluster::singleton(k, i)).collect();
    let mut merged = Vec::new();
    while active.len() > 1 {
        active.shuffle(rng);
        let take = rng.random_range(2..=active.len().min(3));
        let group = active.split_off(active.len() - take);
        let union = group[1..].iter().fold(group[0].clone(), |acc, c| acc.union(c));
        merged.push(union.clone());
        active.push(union);
    }
    let kept: Vec<Cluster> = merged.into_iter().filter(|_| rng.random_bool(0.5)).collect();
    Hierarchy::from_clusters(k, kept).expect("merges are laminar")
}

/// A random dendrogram on [`random_hierarchy`]. Heights step by multiples
/// of 1/4 from the root down, so incomparable vertices often share a height.
pub fn random_dendrogram<R: Rng>(rng: &mut R, k: usize, orientation: Orientation) -> Dendrogram {
    let h = random_hierarchy(rng, k);
    let mut heights = vec![None; h.len()];
    heights[h.root()] = Some(rng.random_range(0..8) as f64 * 0.25);
    // preorder visits parents first
    for v in 1..h.len() {
        if h.is_leaf(v) {
            continue;
        }
        let p = heights[h.parent(v).expect("non-root vertex has a parent")].expect("parent has a height");
        let step = rng.random_range(1..=4) as f64 * 0.25;
        heights[v] = Some(match orientation {
            Orientation::Similarity => p + step,
            Orientation::Dissimilarity => p - step,
        });
    }
    if k == 1 {
        heights[0] = None;
    }
    Dendrogram::new(h, heights, orientation).expect("heights are strictly monotone")
}
