//! Generic agglomerative linkage.
//!
//! Starting from singletons, the engine repeatedly merges the tightest pair
//! of active clusters `t1, t2` and scores the merged cluster against every
//! remaining active cluster `t3` through an update rule
//!
//! ```text
//! s(t1 ∪ t2, t3) = f(s(t1, t2), s(t2, t3), s(t3, t1), |t1|, |t2|, |t3|)
//! ```
//!
//! Ties between equally tight pairs go to the pair whose smallest members,
//! ordered as `(lower, higher)`, are lexicographically smallest.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::Cluster;
use crate::error::{Error, Result};
use crate::hierarchy::{Merge, MergeTrace};
use crate::matrix::{Orientation, PairMatrix};

/// Lance-Williams coefficients `(η1, η2, β, γ)` for
/// `η1·d13 + η2·d23 + β·d12 + γ·|d13 − d23|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LwCoeffs {
    pub eta1: f64,
    pub eta2: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl LwCoeffs {
    fn combine(&self, q12: f64, q23: f64, q31: f64) -> f64 {
        let mut v = self.eta1 * q31 + self.eta2 * q23 + self.beta * q12;
        if self.gamma != 0.0 {
            v += self.gamma * (q31 - q23).abs();
        }
        v
    }
}

/// Size-dependent Lance-Williams coefficients.
pub trait LwCoefficients: Send + Sync + fmt::Debug {
    fn coefficients(&self, n1: usize, n2: usize, n3: usize) -> LwCoeffs;

    /// Short description used in rule names.
    fn describe(&self) -> String {
        format!("{self:?}")
    }
}

impl LwCoefficients for LwCoeffs {
    fn coefficients(&self, _: usize, _: usize, _: usize) -> LwCoeffs {
        *self
    }

    fn describe(&self) -> String {
        format!("{},{},{},{}", self.eta1, self.eta2, self.beta, self.gamma)
    }
}

type UpdateFn = dyn Fn(f64, f64, f64, usize, usize, usize) -> f64 + Send + Sync;

/// A user-supplied update function `f(q12, q23, q31, n1, n2, n3)`.
///
/// Construction spot-checks that `f` is symmetric in the two merged
/// clusters. Right-continuity in `q12` is assumed.
#[derive(Clone)]
pub struct CustomRule {
    name: String,
    f: Arc<UpdateFn>,
}

const SYMMETRY_PROBES: usize = 64;

impl CustomRule {
    pub fn new<F>(name: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, f64, usize, usize, usize) -> f64 + Send + Sync + 'static,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
        for _ in 0..SYMMETRY_PROBES {
            let q12 = rng.random_range(0.0..10.0);
            let q23 = rng.random_range(0.0..10.0);
            let q31 = rng.random_range(0.0..10.0);
            let n1 = rng.random_range(1..=16);
            let n2 = rng.random_range(1..=16);
            let n3 = rng.random_range(1..=16);
            let lhs = f(q12, q23, q31, n1, n2, n3);
            let rhs = f(q12, q31, q23, n2, n1, n3);
            let scale = 1f64.max(lhs.abs()).max(rhs.abs());
            let diff = (lhs - rhs).abs();
            if lhs != rhs && (diff.is_nan() || diff > 1e-12 * scale) {
                return Err(Error::AsymmetricRule {
                    inputs: (q12, q23, q31, n1, n2, n3),
                    lhs,
                    rhs,
                });
            }
        }
        Ok(CustomRule {
            name: name.into(),
            f: Arc::new(f),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRule").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug)]
pub enum LinkageRule {
    /// Tightest of the two scores.
    Single,
    /// Loosest of the two scores.
    Complete,
    /// Size-weighted mean `(n1·q31 + n2·q23) / (n1 + n2)`.
    WeightedAverage,
    /// Plain mean `(q31 + q23) / 2`.
    UnweightedAverage,
    /// Dissimilarity only.
    Ward,
    /// Dissimilarity only; size-weighted η with `β = −n1·n2 / (n1 + n2)²`.
    Median,
    /// Dissimilarity only; `η = 1/2`, `β = −1/4`.
    Centroid,
    LanceWilliams(Arc<dyn LwCoefficients>),
    Custom(CustomRule),
}

impl LinkageRule {
    /// The four rules that recover the finest valid hierarchy after trimming.
    pub const CONFORMING: [LinkageRule; 4] = [
        LinkageRule::Single,
        LinkageRule::Complete,
        LinkageRule::WeightedAverage,
        LinkageRule::UnweightedAverage,
    ];

    pub fn lance_williams(eta1: f64, eta2: f64, beta: f64, gamma: f64) -> Self {
        LinkageRule::LanceWilliams(Arc::new(LwCoeffs {
            eta1,
            eta2,
            beta,
            gamma,
        }))
    }

    pub fn name(&self) -> String {
        match self {
            LinkageRule::Single => "single".into(),
            LinkageRule::Complete => "complete".into(),
            LinkageRule::WeightedAverage => "avg-weighted".into(),
            LinkageRule::UnweightedAverage => "avg-unweighted".into(),
            LinkageRule::Ward => "ward".into(),
            LinkageRule::Median => "median".into(),
            LinkageRule::Centroid => "centroid".into(),
            LinkageRule::LanceWilliams(c) => format!("lance-williams({})", c.describe()),
            LinkageRule::Custom(c) => c.name.clone(),
        }
    }

    /// Orientation the rule is restricted to, if any.
    pub fn required_orientation(&self) -> Option<Orientation> {
        match self {
            LinkageRule::Ward | LinkageRule::Median | LinkageRule::Centroid => {
                Some(Orientation::Dissimilarity)
            }
            _ => None,
        }
    }

    pub fn check_orientation(&self, orientation: Orientation) -> Result<()> {
        match self.required_orientation() {
            Some(required) if required != orientation => Err(Error::RuleOrientationMismatch {
                rule: self.name(),
                required,
                requested: orientation,
            }),
            _ => Ok(()),
        }
    }

    /// Lance-Williams coefficients for the built-in parametric rules.
    pub fn lw_coefficients(&self, n1: usize, n2: usize, n3: usize) -> Option<LwCoeffs> {
        let (a, b, c) = (n1 as f64, n2 as f64, n3 as f64);
        match self {
            LinkageRule::Ward => {
                let total = a + b + c;
                Some(LwCoeffs {
                    eta1: (a + c) / total,
                    eta2: (b + c) / total,
                    beta: -c / total,
                    gamma: 0.0,
                })
            }
            LinkageRule::Median => {
                let pair = a + b;
                Some(LwCoeffs {
                    eta1: a / pair,
                    eta2: b / pair,
                    beta: -(a * b) / (pair * pair),
                    gamma: 0.0,
                })
            }
            LinkageRule::Centroid => Some(LwCoeffs {
                eta1: 0.5,
                eta2: 0.5,
                beta: -0.25,
                gamma: 0.0,
            }),
            LinkageRule::LanceWilliams(c) => Some(c.coefficients(n1, n2, n3)),
            _ => None,
        }
    }

    /// Evaluates the update without the orientation compatibility check.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn update(
        &self,
        orientation: Orientation,
        q12: f64,
        q23: f64,
        q31: f64,
        n1: usize,
        n2: usize,
        n3: usize,
    ) -> f64 {
        match self {
            LinkageRule::Single => orientation.best(q23, q31),
            LinkageRule::Complete => orientation.worst(q23, q31),
            LinkageRule::WeightedAverage => {
                if q31 == q23 {
                    q31
                } else {
                    let (a, b) = (n1 as f64, n2 as f64);
                    (a * q31 + b * q23) / (a + b)
                }
            }
            LinkageRule::UnweightedAverage => (q31 + q23) / 2.0,
            LinkageRule::Custom(c) => (c.f)(q12, q23, q31, n1, n2, n3),
            _ => self
                .lw_coefficients(n1, n2, n3)
                .expect("parametric rule")
                .combine(q12, q23, q31),
        }
    }
}

impl fmt::Display for LinkageRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for LinkageRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(LinkageRule::Single),
            "complete" => Ok(LinkageRule::Complete),
            "avg-weighted" | "weighted-average" => Ok(LinkageRule::WeightedAverage),
            "avg-unweighted" | "unweighted-average" => Ok(LinkageRule::UnweightedAverage),
            "ward" => Ok(LinkageRule::Ward),
            "median" => Ok(LinkageRule::Median),
            "centroid" => Ok(LinkageRule::Centroid),
            other => {
                let unknown = || Error::UnknownRule(s.to_string());
                let args = other
                    .strip_prefix("lance-williams(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(unknown)?;
                let c = args
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| unknown()))
                    .collect::<Result<Vec<_>>>()?;
                match c[..] {
                    [eta1, eta2, beta, gamma] => Ok(LinkageRule::lance_williams(eta1, eta2, beta, gamma)),
                    _ => Err(unknown()),
                }
            }
        }
    }
}

/// Score between `t1 ∪ t2` and `t3`.
#[allow(clippy::too_many_arguments)]
pub fn apply_rule(
    rule: &LinkageRule,
    q12: f64,
    q23: f64,
    q31: f64,
    n1: usize,
    n2: usize,
    n3: usize,
    orientation: Orientation,
) -> Result<f64> {
    rule.check_orientation(orientation)?;
    if n1 == 0 || n2 == 0 || n3 == 0 {
        return Err(Error::InvalidParameter("cluster sizes must be positive".into()));
    }
    Ok(rule.update(orientation, q12, q23, q31, n1, n2, n3))
}

/// Runs the agglomeration to completion and returns the binary merge trace.
///
/// Active clusters live in the slot of their smallest member, so the
/// tie-break key of a pair is simply its ordered slot pair.
pub fn run_linkage(m: &PairMatrix, rule: &LinkageRule) -> Result<MergeTrace> {
    let o = m.orientation();
    rule.check_orientation(o)?;
    let k = m.k();
    let mut scores: Vec<f64> = (0..k).flat_map(|x| m.row(x).to_vec()).collect();
    let mut members: Vec<Cluster> = (0..k).map(|i| Cluster::singleton(k, i)).collect();
    let mut sizes = vec![1usize; k];
    let mut alive: Vec<usize> = (0..k).collect();
    let mut merges = Vec::with_capacity(k.saturating_sub(1));

    // Is (score a, partner ja) a better choice than (score b, partner jb) for row i?
    let beats = |a: f64, ja: usize, b: f64, jb: usize| o.better(a, b) || (a == b && ja < jb);

    let nearest = |scores: &[f64], alive: &[usize], i: usize| -> (f64, usize) {
        let mut best = (f64::NAN, usize::MAX);
        for &j in alive {
            if j == i {
                continue;
            }
            let s = scores[i * k + j];
            if best.1 == usize::MAX || beats(s, j, best.0, best.1) {
                best = (s, j);
            }
        }
        best
    };

    let mut row_best: Vec<(f64, usize)> = vec![(f64::NAN, usize::MAX); k];
    if k > 1 {
        for &i in &alive {
            row_best[i] = nearest(&scores, &alive, i);
        }
    }

    for step in 1..k {
        let mut pick: Option<(f64, usize, usize)> = None;
        for &i in &alive {
            let (s, j) = row_best[i];
            let key = (i.min(j), i.max(j));
            let better = match pick {
                None => true,
                Some((ps, pa, pb)) => o.better(s, ps) || (s == ps && key < (pa, pb)),
            };
            if better {
                pick = Some((s, key.0, key.1));
            }
        }
        let (q12, a, b) = pick.expect("at least two active clusters");

        let merged = members[a].union(&members[b]);
        merges.push(Merge {
            left: members[a].clone(),
            right: members[b].clone(),
            merged: merged.clone(),
            score: q12,
        });
        alive.retain(|&t| t != b);
        let (na, nb) = (sizes[a], sizes[b]);
        for &t in &alive {
            if t == a {
                continue;
            }
            let q23 = scores[b * k + t];
            let q31 = scores[t * k + a];
            let v = rule.update(o, q12, q23, q31, na, nb, sizes[t]);
            if !v.is_finite() {
                return Err(Error::NonFiniteScore { merge: step });
            }
            scores[a * k + t] = v;
            scores[t * k + a] = v;
        }
        members[a] = merged;
        sizes[a] = na + nb;

        if alive.len() > 1 {
            row_best[a] = nearest(&scores, &alive, a);
            for &t in &alive {
                if t == a {
                    continue;
                }
                let (s, j) = row_best[t];
                if j == a || j == b {
                    row_best[t] = nearest(&scores, &alive, t);
                } else {
                    let v = scores[t * k + a];
                    if beats(v, a, s, j) {
                        row_best[t] = (v, a);
                    }
                }
            }
        }
    }

    MergeTrace::from_merges(k, merges)
}
