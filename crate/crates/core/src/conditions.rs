//! Randomized conformance checks for linkage update rules.
//!
//! Update rules only ever see three scores and three sizes, so the checks
//! work on abstract configurations of four clusters `t1..t4`: six pairwise
//! scores and four sizes. Each check samples configurations satisfying a
//! condition's premise and evaluates its conclusion through the rule.
//!
//! Written once against [`Orientation`]:
//!
//! * monotonicity across merges (C1 for similarities, C3 for
//!   dissimilarities): if both `t1` and `t2` are tighter to `t3` than to
//!   `t4` and than `t3` is to `t4`, then `t1 ∪ t2` must stay strictly
//!   tighter to `t3` than to `t4`, and than `s(t3, t4)`.
//! * dominance preservation (C2 / C4): if `s(t1, t2)` is tighter than every
//!   cross score between `{t1, t2}` and `{t3, t4}`, it must stay strictly
//!   tighter than both `s(t1, t3 ∪ t4)` and `s(t2, t3 ∪ t4)`.
//! * fix point: `f(q', q, q, ·) = q` whenever `q'` is at least as tight as `q`.
//!
//! A conclusion that holds only with equality counts as a violation.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linkage::LinkageRule;
use crate::matrix::Orientation;
use crate::random::trial_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ConditionId {
    C1,
    C2,
    C3,
    C4,
    FixPoint,
}

impl ConditionId {
    fn salt(self) -> u64 {
        match self {
            ConditionId::C1 => 1,
            ConditionId::C2 => 2,
            ConditionId::C3 => 3,
            ConditionId::C4 => 4,
            ConditionId::FixPoint => 5,
        }
    }

    /// Orientation the condition is stated for; `None` for the fix point.
    pub fn orientation(self) -> Option<Orientation> {
        match self {
            ConditionId::C1 | ConditionId::C2 => Some(Orientation::Similarity),
            ConditionId::C3 | ConditionId::C4 => Some(Orientation::Dissimilarity),
            ConditionId::FixPoint => None,
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// Uniform scores constrained only by the premise.
    Generic,
    /// Near-degenerate regimes where parametric dissimilarity rules break.
    Targeted,
}

/// Pairwise scores among four abstract clusters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadScores {
    pub s12: f64,
    pub s13: f64,
    pub s14: f64,
    pub s23: f64,
    pub s24: f64,
    pub s34: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SampledInputs {
    Quad { scores: QuadScores, sizes: [usize; 4] },
    FixPoint { q_tight: f64, q: f64, sizes: [usize; 3] },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionViolation {
    pub condition: ConditionId,
    pub orientation: Orientation,
    pub sampler: Sampler,
    pub sample: usize,
    pub inputs: SampledInputs,
    /// The side of the conclusion that should have been strictly tighter
    /// (for the fix point: the rule's output).
    pub lhs: f64,
    /// The side it was compared against (for the fix point: `q`).
    pub rhs: f64,
}

impl ConditionViolation {
    /// Re-evaluates the stored inputs: the premise must hold and the
    /// conclusion must fail with the same two sides.
    pub fn replay(&self, rule: &LinkageRule) -> bool {
        match evaluate(rule, self.condition, self.orientation, &self.inputs) {
            Some(Outcome { holds: false, lhs, rhs }) => {
                lhs.to_bits() == self.lhs.to_bits() && rhs.to_bits() == self.rhs.to_bits()
            }
            _ => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckConfig {
    pub samples: usize,
    pub seed: u64,
    /// Cluster sizes are drawn from `1..=size_bound`.
    pub size_bound: usize,
    pub jobs: Option<usize>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            samples: 10_000,
            seed: 0,
            size_bound: 16,
            jobs: None,
        }
    }
}

struct Outcome {
    holds: bool,
    lhs: f64,
    rhs: f64,
}

/// `None` when the premise is false.
fn evaluate(
    rule: &LinkageRule,
    condition: ConditionId,
    o: Orientation,
    inputs: &SampledInputs,
) -> Option<Outcome> {
    match (condition, inputs) {
        (ConditionId::C1 | ConditionId::C3, SampledInputs::Quad { scores: q, sizes: n }) => {
            let premise = o.better(q.s13, o.best(q.s14, q.s34)) && o.better(q.s23, o.best(q.s24, q.s34));
            if !premise {
                return None;
            }
            // s(t1 ∪ t2, t3) = f(s12, s23, s31, n1, n2, n3)
            let to3 = rule.update(o, q.s12, q.s23, q.s13, n[0], n[1], n[2]);
            let to4 = rule.update(o, q.s12, q.s24, q.s14, n[0], n[1], n[3]);
            let rhs = o.best(to4, q.s34);
            Some(Outcome {
                holds: o.better(to3, rhs),
                lhs: to3,
                rhs,
            })
        }
        (ConditionId::C2 | ConditionId::C4, SampledInputs::Quad { scores: q, sizes: n }) => {
            let cross = o.best(o.best(q.s13, q.s14), o.best(q.s23, q.s24));
            if !o.better(q.s12, cross) {
                return None;
            }
            // s(t3 ∪ t4, ti) = f(s34, s4i, si3, n3, n4, ni)
            let from1 = rule.update(o, q.s34, q.s14, q.s13, n[2], n[3], n[0]);
            let from2 = rule.update(o, q.s34, q.s24, q.s23, n[2], n[3], n[1]);
            let rhs = o.best(from1, from2);
            Some(Outcome {
                holds: o.better(q.s12, rhs),
                lhs: q.s12,
                rhs,
            })
        }
        (ConditionId::FixPoint, SampledInputs::FixPoint { q_tight, q, sizes: n }) => {
            if o.better(*q, *q_tight) {
                return None;
            }
            let v = rule.update(o, *q_tight, *q, *q, n[0], n[1], n[2]);
            Some(Outcome {
                holds: v == *q,
                lhs: v,
                rhs: *q,
            })
        }
        _ => None,
    }
}

fn sizes<R: Rng, const N: usize>(rng: &mut R, bound: usize) -> [usize; N] {
    std::array::from_fn(|_| rng.random_range(1..=bound))
}

/// Maps a tightness value in `[0, 1]` (1 = tightest) onto a score.
fn score(o: Orientation, tightness: f64) -> f64 {
    match o {
        Orientation::Similarity => tightness,
        Orientation::Dissimilarity => 2.0 - tightness,
    }
}

fn above<R: Rng>(rng: &mut R, floor: f64) -> f64 {
    rng.random_range(floor..=1.0)
}

fn generic_monotonicity<R: Rng>(rng: &mut R, o: Orientation, bound: usize) -> SampledInputs {
    let t34: f64 = rng.random();
    let t14: f64 = rng.random();
    let t24: f64 = rng.random();
    let t13 = above(rng, t14.max(t34));
    let t23 = above(rng, t24.max(t34));
    let t12: f64 = rng.random();
    SampledInputs::Quad {
        scores: QuadScores {
            s12: score(o, t12),
            s13: score(o, t13),
            s14: score(o, t14),
            s23: score(o, t23),
            s24: score(o, t24),
            s34: score(o, t34),
        },
        sizes: sizes(rng, bound),
    }
}

fn generic_dominance<R: Rng>(rng: &mut R, o: Orientation, bound: usize) -> SampledInputs {
    let cross: [f64; 4] = std::array::from_fn(|_| rng.random());
    let t12 = above(rng, cross.iter().copied().fold(0.0, f64::max));
    let t34: f64 = rng.random();
    SampledInputs::Quad {
        scores: QuadScores {
            s12: score(o, t12),
            s13: score(o, cross[0]),
            s14: score(o, cross[1]),
            s23: score(o, cross[2]),
            s24: score(o, cross[3]),
            s34: score(o, t34),
        },
        sizes: sizes(rng, bound),
    }
}

const NEAR: f64 = 0.05;

/// Dissimilarities where `d(t1, t2)` is near zero and `d(ti, t3)` sits just
/// below both `d(ti, t4)` and `d(t3, t4)`, with `|t3| > |t4|`.
fn targeted_monotonicity<R: Rng>(rng: &mut R, bound: usize) -> SampledInputs {
    let bound = bound.max(2);
    let base: f64 = rng.random_range(1.0..2.0);
    let mut up = || base * (1.0 + rng.random_range(0.0..NEAR));
    let (d14, d24, d34) = (up(), up(), up());
    let d13 = d14.min(d34) * (1.0 - rng.random_range(0.0..NEAR));
    let d23 = d24.min(d34) * (1.0 - rng.random_range(0.0..NEAR));
    let d12 = base * rng.random_range(0.0..NEAR);
    let n4 = rng.random_range(1..bound);
    let n3 = rng.random_range(n4 + 1..=bound);
    let n1 = rng.random_range(1..=bound);
    let n2 = rng.random_range(1..=bound);
    SampledInputs::Quad {
        scores: QuadScores {
            s12: d12,
            s13: d13,
            s14: d14,
            s23: d23,
            s24: d24,
            s34: d34,
        },
        sizes: [n1, n2, n3, n4],
    }
}

/// Dissimilarities where the cross scores sit just above `d(t1, t2)`.
fn targeted_dominance<R: Rng>(rng: &mut R, bound: usize) -> SampledInputs {
    let d12: f64 = rng.random_range(1.0..2.0);
    let mut up = || d12 * (1.0 + rng.random_range(0.0..NEAR));
    let (d13, d14, d23, d24) = (up(), up(), up(), up());
    let d34 = d12 * rng.random_range(0.5..2.0);
    SampledInputs::Quad {
        scores: QuadScores {
            s12: d12,
            s13: d13,
            s14: d14,
            s23: d23,
            s24: d24,
            s34: d34,
        },
        sizes: sizes(rng, bound),
    }
}

fn fixpoint_sample<R: Rng>(rng: &mut R, o: Orientation, bound: usize) -> SampledInputs {
    let q: f64 = rng.random_range(0.0..10.0);
    // one sample in eight sits on the boundary q' = q
    let q_tight = if rng.random_range(0..8) == 0 {
        q
    } else {
        match o {
            Orientation::Similarity => q + rng.random_range(0.0..10.0),
            Orientation::Dissimilarity => q * rng.random_range(0.0..1.0),
        }
    };
    SampledInputs::FixPoint {
        q_tight,
        q,
        sizes: sizes(rng, bound),
    }
}

fn run_samples(
    rule: &LinkageRule,
    condition: ConditionId,
    o: Orientation,
    sampler: Sampler,
    cfg: &CheckConfig,
) -> Result<Vec<ConditionViolation>> {
    rule.check_orientation(o)?;
    if cfg.size_bound == 0 {
        return Err(Error::InvalidParameter("size bound must be positive".into()));
    }
    let seed = cfg.seed ^ (condition.salt() << 56) ^ ((sampler as u64) << 48);
    let job = || {
        (0..cfg.samples)
            .into_par_iter()
            .filter_map(|i| {
                let mut rng = trial_rng(seed, i as u64);
                let inputs = match (condition, sampler) {
                    (ConditionId::FixPoint, _) => fixpoint_sample(&mut rng, o, cfg.size_bound),
                    (ConditionId::C1 | ConditionId::C3, Sampler::Generic) => {
                        generic_monotonicity(&mut rng, o, cfg.size_bound)
                    }
                    (ConditionId::C2 | ConditionId::C4, Sampler::Generic) => {
                        generic_dominance(&mut rng, o, cfg.size_bound)
                    }
                    (ConditionId::C1 | ConditionId::C3, Sampler::Targeted) => {
                        targeted_monotonicity(&mut rng, cfg.size_bound)
                    }
                    (ConditionId::C2 | ConditionId::C4, Sampler::Targeted) => {
                        targeted_dominance(&mut rng, cfg.size_bound)
                    }
                };
                match evaluate(rule, condition, o, &inputs) {
                    Some(Outcome { holds: false, lhs, rhs }) => Some(ConditionViolation {
                        condition,
                        orientation: o,
                        sampler,
                        sample: i,
                        inputs,
                        lhs,
                        rhs,
                    }),
                    _ => None,
                }
            })
            .collect()
    };
    match cfg.jobs {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(job)),
        None => Ok(job()),
    }
}

/// Monotonicity across merges, similarity version.
pub fn check_condition_1(rule: &LinkageRule, cfg: &CheckConfig) -> Result<Vec<ConditionViolation>> {
    run_samples(rule, ConditionId::C1, Orientation::Similarity, Sampler::Generic, cfg)
}

/// Dominance preservation, similarity version.
pub fn check_condition_2(rule: &LinkageRule, cfg: &CheckConfig) -> Result<Vec<ConditionViolation>> {
    run_samples(rule, ConditionId::C2, Orientation::Similarity, Sampler::Generic, cfg)
}

/// Monotonicity across merges, dissimilarity version.
pub fn check_condition_3(
    rule: &LinkageRule,
    cfg: &CheckConfig,
    sampler: Sampler,
) -> Result<Vec<ConditionViolation>> {
    run_samples(rule, ConditionId::C3, Orientation::Dissimilarity, sampler, cfg)
}

/// Dominance preservation, dissimilarity version.
pub fn check_condition_4(
    rule: &LinkageRule,
    cfg: &CheckConfig,
    sampler: Sampler,
) -> Result<Vec<ConditionViolation>> {
    run_samples(rule, ConditionId::C4, Orientation::Dissimilarity, sampler, cfg)
}

pub fn check_fixpoint(
    rule: &LinkageRule,
    orientation: Orientation,
    cfg: &CheckConfig,
) -> Result<Vec<ConditionViolation>> {
    run_samples(rule, ConditionId::FixPoint, orientation, Sampler::Generic, cfg)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub condition: ConditionId,
    pub sampler: Sampler,
    pub samples: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RuleReport {
    pub rule: String,
    pub orientation: Orientation,
    pub seed: u64,
    pub summaries: Vec<CheckSummary>,
    #[serde(skip)]
    pub violations: Vec<ConditionViolation>,
}

impl RuleReport {
    pub fn conforms(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every check that applies to `orientation`: C1, C2 and the fix point for
/// similarities; C3 and C4 under both samplers plus the fix point for
/// dissimilarities.
pub fn check_rule(rule: &LinkageRule, orientation: Orientation, cfg: &CheckConfig) -> Result<RuleReport> {
    let plan: Vec<(ConditionId, Sampler)> = match orientation {
        Orientation::Similarity => vec![
            (ConditionId::C1, Sampler::Generic),
            (ConditionId::C2, Sampler::Generic),
            (ConditionId::FixPoint, Sampler::Generic),
        ],
        Orientation::Dissimilarity => vec![
            (ConditionId::C3, Sampler::Generic),
            (ConditionId::C3, Sampler::Targeted),
            (ConditionId::C4, Sampler::Generic),
            (ConditionId::C4, Sampler::Targeted),
            (ConditionId::FixPoint, Sampler::Generic),
        ],
    };
    let mut summaries = Vec::new();
    let mut violations = Vec::new();
    for (condition, sampler) in plan {
        let found = run_samples(rule, condition, orientation, sampler, cfg)?;
        summaries.push(CheckSummary {
            condition,
            sampler,
            samples: cfg.samples,
            violations: found.len(),
        });
        violations.extend(found);
    }
    Ok(RuleReport {
        rule: rule.name(),
        orientation,
        seed: cfg.seed,
        summaries,
        violations,
    })
}
