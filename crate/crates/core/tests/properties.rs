use proptest::prelude::*;

use validhier::conditions::{check_fixpoint, CheckConfig};
use validhier::io::{hierarchy_to_newick, parse_newick, TreeDocument};
use validhier::oracle::valid_clusters;
use validhier::prune::trim;
use validhier::random::{random_dendrogram, random_hierarchy, random_matrix, random_matrix_with_ties, trial_rng};
use validhier::ultrametric::{dendrogram_from_ultrametric, is_ultrametric};
use validhier::validity::{
    cluster_gap, is_strongly_valid_hierarchy, is_valid_hierarchy, is_valid_hierarchy_full, parent_restricted_gaps,
    vertex_gaps,
};
use validhier::{
    apply_rule, contains, finest_valid_hierarchy, run_linkage, trimmed_linkage, ultrametric_from_dendrogram,
    Cluster, Hierarchy, LinkageRule, Orientation, PairMatrix,
};

fn orientation() -> impl Strategy<Value = Orientation> {
    prop_oneof![Just(Orientation::Similarity), Just(Orientation::Dissimilarity)]
}

/// Distinct off-diagonal entries.
fn distinct_matrix(k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PairMatrix> {
    (k, orientation(), any::<u64>()).prop_map(|(k, o, seed)| random_matrix(&mut trial_rng(seed, 0), k, o))
}

/// Entries drawn from a handful of levels, so ties are common.
fn tied_matrix(k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PairMatrix> {
    (k, orientation(), 1u32..5, any::<u64>())
        .prop_map(|(k, o, levels, seed)| random_matrix_with_ties(&mut trial_rng(seed, 0), k, o, levels))
}

fn any_matrix(k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PairMatrix> {
    prop_oneof![distinct_matrix(k.clone()), tied_matrix(k)]
}

fn hierarchy(k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Hierarchy> {
    (k, any::<u64>()).prop_map(|(k, seed)| random_hierarchy(&mut trial_rng(seed, 0), k))
}

fn tree_for(m: &PairMatrix, seed: u64) -> Hierarchy {
    random_hierarchy(&mut trial_rng(seed, 1), m.k())
}

fn rules_for(o: Orientation) -> Vec<LinkageRule> {
    let mut rules = LinkageRule::CONFORMING.to_vec();
    if o == Orientation::Dissimilarity {
        rules.extend([LinkageRule::Ward, LinkageRule::Median, LinkageRule::Centroid]);
    }
    rules
}

fn permuted(m: &PairMatrix, perm: &[usize]) -> PairMatrix {
    let k = m.k();
    let scores = (0..k * k).map(|i| m.get(perm[i / k], perm[i % k])).collect();
    PairMatrix::from_dense(k, scores, m.orientation(), None).unwrap()
}

fn permute_cluster(c: &Cluster, inverse: &[usize]) -> Cluster {
    Cluster::from_indices(c.capacity(), c.iter().map(|x| inverse[x])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn valid_clusters_are_laminar(m in any_matrix(2..=9)) {
        let found = valid_clusters(&m, 0.0, 20).unwrap();
        for (i, a) in found.iter().enumerate() {
            for b in &found[i + 1..] {
                prop_assert!(!a.properly_overlaps(b), "{a} and {b}");
            }
        }
    }

    #[test]
    fn oracle_is_valid_and_greatest(m in any_matrix(2..=9), seed in any::<u64>()) {
        let finest = finest_valid_hierarchy(&m, 0.0).unwrap();
        prop_assert!(is_valid_hierarchy(&m, &finest, 0.0).unwrap());
        // any sub-family of the finest hierarchy is valid and contained in it
        let mut rng = trial_rng(seed, 2);
        let sub: Vec<Cluster> = finest
            .clusters()
            .iter()
            .filter(|_| rand::Rng::random_bool(&mut rng, 0.5))
            .cloned()
            .collect();
        let h = Hierarchy::from_clusters(m.k(), sub).unwrap();
        prop_assert!(is_valid_hierarchy(&m, &h, 0.0).unwrap());
        prop_assert!(contains(&h, &finest).unwrap());
        // and every valid random tree is contained too
        let t = tree_for(&m, seed);
        if is_valid_hierarchy(&m, &t, 0.0).unwrap() {
            prop_assert!(contains(&t, &finest).unwrap());
        }
    }

    #[test]
    fn parent_restricted_verdict_matches_full(m in any_matrix(2..=10), seed in any::<u64>(), from_oracle in any::<bool>()) {
        let t = if from_oracle {
            let finest = finest_valid_hierarchy(&m, 0.0).unwrap();
            let extra = tree_for(&m, seed);
            // mix oracle clusters with a random tree's clusters where laminar
            let mut clusters: Vec<Cluster> = finest.clusters().to_vec();
            for c in extra.clusters() {
                if clusters.iter().all(|d| !c.properly_overlaps(d)) {
                    clusters.push(c.clone());
                }
            }
            Hierarchy::from_clusters(m.k(), clusters).unwrap()
        } else {
            tree_for(&m, seed)
        };
        prop_assert_eq!(
            is_valid_hierarchy(&m, &t, 0.0).unwrap(),
            is_valid_hierarchy_full(&m, &t, 0.0).unwrap()
        );
        // restricted gaps never undercut the full ones
        let full = vertex_gaps(&m, &t).unwrap();
        let restricted = parent_restricted_gaps(&m, &t).unwrap();
        for (f, r) in full.iter().zip(&restricted) {
            prop_assert!(r >= f);
        }
    }

    #[test]
    fn vertex_gaps_match_cluster_gaps(m in any_matrix(2..=10), seed in any::<u64>()) {
        let t = tree_for(&m, seed);
        let gaps = vertex_gaps(&m, &t).unwrap();
        for (v, c) in t.clusters().iter().enumerate() {
            prop_assert_eq!(gaps[v], cluster_gap(&m, c).gap);
        }
    }

    #[test]
    fn epsilon_is_monotone(m in any_matrix(2..=8), e1 in 0.0f64..0.5, de in 0.0f64..0.5) {
        let loose = finest_valid_hierarchy(&m, e1).unwrap();
        let strict = finest_valid_hierarchy(&m, e1 + de).unwrap();
        prop_assert!(contains(&strict, &loose).unwrap());
    }

    #[test]
    fn strong_validity_implies_validity(m in any_matrix(2..=9), seed in any::<u64>()) {
        let t = tree_for(&m, seed);
        if is_strongly_valid_hierarchy(&m, &t, 0.0).unwrap() {
            prop_assert!(is_valid_hierarchy(&m, &t, 0.0).unwrap());
        }
        let finest = finest_valid_hierarchy(&m, 0.0).unwrap();
        if is_strongly_valid_hierarchy(&m, &finest, 0.0).unwrap() {
            prop_assert!(is_valid_hierarchy(&m, &finest, 0.0).unwrap());
        }
    }

    #[test]
    fn trim_is_trace_intersect_oracle(m in any_matrix(2..=9)) {
        let finest = finest_valid_hierarchy(&m, 0.0).unwrap();
        for rule in rules_for(m.orientation()) {
            let trace = run_linkage(&m, &rule).unwrap();
            let trimmed = trim(&m, &trace, 0.0).unwrap();
            prop_assert_eq!(&trimmed, &trace.hierarchy().intersection(&finest).unwrap(), "{}", rule.name());
            prop_assert!(is_valid_hierarchy(&m, &trimmed, 0.0).unwrap());
        }
    }

    #[test]
    fn conforming_rules_recover_the_oracle(m in distinct_matrix(2..=10)) {
        let finest = finest_valid_hierarchy(&m, 0.0).unwrap();
        for rule in LinkageRule::CONFORMING {
            prop_assert_eq!(&trimmed_linkage(&m, &rule, 0.0).unwrap(), &finest, "{}", rule.name());
        }
    }

    #[test]
    fn mirrored_matrix_gives_same_results(m in any_matrix(2..=9), d in distinct_matrix(2..=9)) {
        let mirror = m.mirrored(10.0).unwrap();
        prop_assert_eq!(
            finest_valid_hierarchy(&m, 0.0).unwrap(),
            finest_valid_hierarchy(&mirror, 0.0).unwrap()
        );
        // min and max commute with the reflection exactly, ties included
        for rule in [LinkageRule::Single, LinkageRule::Complete] {
            prop_assert_eq!(
                run_linkage(&m, &rule).unwrap().merges().iter().map(|x| x.merged.clone()).collect::<Vec<_>>(),
                run_linkage(&mirror, &rule).unwrap().merges().iter().map(|x| x.merged.clone()).collect::<Vec<_>>(),
                "{}", rule.name()
            );
        }
        let dm = d.mirrored(10.0).unwrap();
        for rule in LinkageRule::CONFORMING {
            prop_assert_eq!(
                trimmed_linkage(&d, &rule, 0.0).unwrap(),
                trimmed_linkage(&dm, &rule, 0.0).unwrap(),
                "{}", rule.name()
            );
        }
    }

    #[test]
    fn containment_is_a_partial_order(a in hierarchy(1..=8), seed in any::<u64>()) {
        let k = a.k();
        let b = random_hierarchy(&mut trial_rng(seed, 0), k);
        let c = random_hierarchy(&mut trial_rng(seed, 1), k);
        let ab = b.intersection(&a).unwrap();
        prop_assert!(contains(&a, &a).unwrap());
        if contains(&a, &b).unwrap() && contains(&b, &a).unwrap() {
            prop_assert_eq!(&a, &b);
        }
        prop_assert!(contains(&ab, &a).unwrap() && contains(&ab, &b).unwrap());
        if contains(&ab, &c).unwrap() && contains(&c, &a).unwrap() {
            prop_assert!(contains(&ab, &a).unwrap());
        }
    }

    #[test]
    fn hierarchy_structure(h in hierarchy(1..=16)) {
        let k = h.k();
        prop_assert!(h.len() < 2 * k);
        prop_assert_eq!(h.len() == 2 * k - 1, h.is_binary());
        prop_assert_eq!(&Hierarchy::from_clusters(k, h.clusters().to_vec()).unwrap(), &h);
        for v in h.internal_vertices() {
            let ch = h.children(v);
            prop_assert!(ch.len() >= 2);
            let total: usize = ch.iter().map(|&c| h.cluster(c).len()).sum();
            prop_assert_eq!(total, h.cluster(v).len());
            let union = ch[1..].iter().fold(h.cluster(ch[0]).clone(), |acc, &c| acc.union(h.cluster(c)));
            prop_assert_eq!(&union, h.cluster(v));
        }
    }

    #[test]
    fn tree_serializations_round_trip(h in hierarchy(1..=16)) {
        let labels: Vec<String> = (0..h.k()).map(|i| format!("item {i}")).collect();
        let text = hierarchy_to_newick(&h, &labels);
        prop_assert_eq!(&parse_newick(&text, &labels).unwrap().hierarchy, &h);
        let doc = TreeDocument::from_hierarchy(&h, Some(&labels));
        let back: TreeDocument = serde_json::from_str(&doc.to_json_pretty()).unwrap();
        prop_assert_eq!(&back.to_hierarchy(None).unwrap(), &h);
    }

    #[test]
    fn ultrametric_round_trip(k in 1usize..=12, o in orientation(), seed in any::<u64>()) {
        let d = random_dendrogram(&mut trial_rng(seed, 0), k, o);
        let m = ultrametric_from_dendrogram(&d);
        prop_assert!(is_ultrametric(&m));
        let back = dendrogram_from_ultrametric(&m).unwrap();
        prop_assert_eq!(back.hierarchy(), d.hierarchy());
        for v in d.hierarchy().internal_vertices() {
            prop_assert_eq!(back.height(v), d.height(v));
        }
        prop_assert_eq!(back.hierarchy(), &finest_valid_hierarchy(&m, 0.0).unwrap());
    }

    #[test]
    fn permutation_invariance(m in any_matrix(2..=8), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let k = m.k();
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut trial_rng(seed, 0));
        let mut inverse = vec![0; k];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let pm = permuted(&m, &perm);
        prop_assert_eq!(is_ultrametric(&m), is_ultrametric(&pm));
        let finest = finest_valid_hierarchy(&m, 0.0).unwrap();
        let moved = Hierarchy::from_clusters(k, finest.clusters().iter().map(|c| permute_cluster(c, &inverse))).unwrap();
        prop_assert_eq!(finest_valid_hierarchy(&pm, 0.0).unwrap(), moved);
    }

    #[test]
    fn fixpoint_holds_exactly(q in -100.0f64..100.0, dq in 0.0f64..100.0, n in prop::array::uniform3(1usize..=16)) {
        for rule in LinkageRule::CONFORMING {
            prop_assert_eq!(apply_rule(&rule, q + dq, q, q, n[0], n[1], n[2], Orientation::Similarity).unwrap(), q);
            prop_assert_eq!(apply_rule(&rule, q - dq, q, q, n[0], n[1], n[2], Orientation::Dissimilarity).unwrap(), q);
        }
    }

    #[test]
    fn ultrametric_matrices_recover_their_oracle(k in 2usize..=10, o in orientation(), seed in any::<u64>()) {
        let d = random_dendrogram(&mut trial_rng(seed, 3), k, o);
        let m = ultrametric_from_dendrogram(&d);
        for rule in LinkageRule::CONFORMING {
            prop_assert_eq!(trimmed_linkage(&m, &rule, 0.0).unwrap(), finest_valid_hierarchy(&m, 0.0).unwrap());
        }
    }
}

#[test]
fn fixpoint_checker_agrees() {
    let cfg = CheckConfig {
        samples: 2000,
        ..CheckConfig::default()
    };
    for rule in LinkageRule::CONFORMING {
        for o in [Orientation::Similarity, Orientation::Dissimilarity] {
            assert!(check_fixpoint(&rule, o, &cfg).unwrap().is_empty());
        }
    }
}
