//! Symmetric pairwise score tables.
//!
//! Scores are either similarities (larger is tighter) or dissimilarities
//! (smaller is tighter). Every algorithm downstream is written once against
//! the comparison helpers on [`Orientation`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Similarity,
    Dissimilarity,
}

impl Orientation {
    /// True when `a` is a strictly tighter score than `b`.
    #[inline]
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Orientation::Similarity => a > b,
            Orientation::Dissimilarity => a < b,
        }
    }

    /// The tighter of two scores.
    #[inline]
    pub fn best(self, a: f64, b: f64) -> f64 {
        if self.better(b, a) {
            b
        } else {
            a
        }
    }

    /// The looser of two scores.
    #[inline]
    pub fn worst(self, a: f64, b: f64) -> f64 {
        if self.better(b, a) {
            a
        } else {
            b
        }
    }

    /// How much tighter `inner` is than `outer`: `inner - outer` for
    /// similarities, `outer - inner` for dissimilarities.
    #[inline]
    pub fn margin(self, inner: f64, outer: f64) -> f64 {
        match self {
            Orientation::Similarity => inner - outer,
            Orientation::Dissimilarity => outer - inner,
        }
    }

    /// The loosest possible score; identity for [`Orientation::best`].
    pub fn loosest(self) -> f64 {
        match self {
            Orientation::Similarity => f64::NEG_INFINITY,
            Orientation::Dissimilarity => f64::INFINITY,
        }
    }

    /// The tightest possible score; identity for [`Orientation::worst`].
    pub fn tightest(self) -> f64 {
        match self {
            Orientation::Similarity => f64::INFINITY,
            Orientation::Dissimilarity => f64::NEG_INFINITY,
        }
    }

    pub fn flipped(self) -> Orientation {
        match self {
            Orientation::Similarity => Orientation::Dissimilarity,
            Orientation::Dissimilarity => Orientation::Similarity,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Similarity => "similarity",
            Orientation::Dissimilarity => "dissimilarity",
        })
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "similarity" | "sim" => Ok(Orientation::Similarity),
            "dissimilarity" | "dissim" | "distance" => Ok(Orientation::Dissimilarity),
            other => Err(Error::Parse(format!("unknown orientation {other:?}"))),
        }
    }
}

/// A validated symmetric `k × k` score table.
///
/// Invariants: every entry is finite, the table is exactly symmetric, and
/// each self-score is strictly tighter than every score of that item with
/// another item.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMatrix {
    k: usize,
    scores: Vec<f64>,
    orientation: Orientation,
    labels: Option<Vec<String>>,
}

impl PairMatrix {
    /// Validates a raw square table. `None` entries are allowed only on the
    /// diagonal; they are filled one unit beyond the tightest off-diagonal
    /// score.
    pub fn ingest(
        raw: Vec<Vec<Option<f64>>>,
        orientation: Orientation,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let k = raw.len();
        if k == 0 {
            return Err(Error::EmptyMatrix);
        }
        for (row, r) in raw.iter().enumerate() {
            if r.len() != k {
                return Err(Error::NotSquare {
                    row,
                    found: r.len(),
                    expected: k,
                });
            }
        }
        let mut tightest_off: Option<f64> = None;
        for (x, row) in raw.iter().enumerate() {
            for (y, v) in row.iter().enumerate() {
                if x == y {
                    if let Some(v) = v {
                        if !v.is_finite() {
                            return Err(Error::NonFinite { x, y });
                        }
                    }
                    continue;
                }
                let v = v.ok_or(Error::MissingEntry { x, y })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { x, y });
                }
                tightest_off = Some(match tightest_off {
                    Some(t) => orientation.best(t, v),
                    None => v,
                });
            }
        }
        let fill = match (tightest_off, orientation) {
            (None, _) => 0.0,
            (Some(t), Orientation::Similarity) => t + 1.0,
            (Some(t), Orientation::Dissimilarity) => t - 1.0,
        };
        let mut scores = Vec::with_capacity(k * k);
        for (x, row) in raw.into_iter().enumerate() {
            for (y, v) in row.into_iter().enumerate() {
                scores.push(if x == y { v.unwrap_or(fill) } else { v.unwrap() });
            }
        }
        Self::from_dense(k, scores, orientation, labels)
    }

    /// Validates a complete row-major table.
    pub fn from_dense(
        k: usize,
        scores: Vec<f64>,
        orientation: Orientation,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyMatrix);
        }
        if scores.len() != k * k {
            return Err(Error::NotSquare {
                row: 0,
                found: scores.len(),
                expected: k * k,
            });
        }
        if let Some(l) = &labels {
            if l.len() != k {
                return Err(Error::LabelCount {
                    expected: k,
                    found: l.len(),
                });
            }
            let mut seen = std::collections::HashSet::new();
            for name in l {
                if !seen.insert(name.as_str()) {
                    return Err(Error::DuplicateLabel(name.clone()));
                }
            }
        }
        for x in 0..k {
            for y in 0..k {
                if !scores[x * k + y].is_finite() {
                    return Err(Error::NonFinite { x, y });
                }
            }
        }
        for x in 0..k {
            for y in (x + 1)..k {
                let (a, b) = (scores[x * k + y], scores[y * k + x]);
                if a != b {
                    return Err(Error::Asymmetric {
                        x,
                        y,
                        delta: a - b,
                    });
                }
            }
        }
        for x in 0..k {
            let own = scores[x * k + x];
            for y in 0..k {
                if y != x && !orientation.better(own, scores[x * k + y]) {
                    return Err(Error::SelfDominanceViolation { x, y });
                }
            }
        }
        Ok(PairMatrix {
            k,
            scores,
            orientation,
            labels,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.scores[x * self.k + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.scores[x * self.k..(x + 1) * self.k]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of item `i`, defaulting to `x1, x2, …` (1-based).
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => default_label(i),
        }
    }

    pub fn all_labels(&self) -> Vec<String> {
        (0..self.k).map(|i| self.label(i)).collect()
    }

    pub fn with_labels(self, labels: Option<Vec<String>>) -> Result<Self> {
        PairMatrix::from_dense(self.k, self.scores, self.orientation, labels)
    }

    /// Rows as owned vectors.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.k).map(|x| self.row(x).to_vec()).collect()
    }

    /// `better(a, b)`: is `a` a tighter score than `b` under this matrix's orientation.
    #[inline]
    pub fn better(&self, a: f64, b: f64) -> bool {
        self.orientation.better(a, b)
    }

    /// The same scores reflected through `constant`, with orientation flipped:
    /// entry `(x, y)` becomes `constant - score(x, y)`.
    pub fn mirrored(&self, constant: f64) -> Result<PairMatrix> {
        let scores = self.scores.iter().map(|v| constant - v).collect();
        PairMatrix::from_dense(self.k, scores, self.orientation.flipped(), self.labels.clone())
    }
}

pub fn default_label(i: usize) -> String {
    format!("x{}", i + 1)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn some_rows(rows: &[&[f64]]) -> Vec<Vec<Option<f64>>> {
        rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect()
    }

    #[test]
    fn small_golden_matrices_are_accepted() {
        assert_eq!(nested_similarity().k(), 5);
        assert_eq!(two_pair_dissimilarity().get(2, 3), 3.0);
    }

    #[test]
    fn dominated_diagonal_is_rejected() {
        let raw = some_rows(&[&[3.0, 5.0], &[5.0, 3.0]]);
        let err = PairMatrix::ingest(raw, Orientation::Similarity, None).unwrap_err();
        assert!(matches!(err, Error::SelfDominanceViolation { x: 0, y: 1 }));
    }

    #[test]
    fn equal_diagonal_is_rejected() {
        let raw = some_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(PairMatrix::ingest(raw, Orientation::Dissimilarity, None).is_err());
    }

    #[test]
    fn asymmetry_is_reported() {
        let raw = some_rows(&[&[3.0, 1.0], &[1.5, 3.0]]);
        match PairMatrix::ingest(raw, Orientation::Similarity, None) {
            Err(Error::Asymmetric { x: 0, y: 1, delta }) => assert_eq!(delta, -0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_is_rejected() {
        let raw = some_rows(&[&[3.0, f64::NAN], &[f64::NAN, 3.0]]);
        assert!(matches!(
            PairMatrix::ingest(raw, Orientation::Similarity, None),
            Err(Error::NonFinite { x: 0, y: 1 })
        ));
    }

    #[test]
    fn blank_diagonal_is_filled() {
        let raw = vec![
            vec![None, Some(2.0), Some(5.0)],
            vec![Some(2.0), None, Some(1.0)],
            vec![Some(5.0), Some(1.0), None],
        ];
        let s = PairMatrix::ingest(raw.clone(), Orientation::Similarity, None).unwrap();
        assert_eq!(s.get(1, 1), 6.0);
        let d = PairMatrix::ingest(raw, Orientation::Dissimilarity, None).unwrap();
        assert_eq!(d.get(2, 2), 0.0);
    }

    #[test]
    fn missing_off_diagonal_is_rejected() {
        let raw = vec![vec![None, None], vec![Some(1.0), None]];
        assert!(matches!(
            PairMatrix::ingest(raw, Orientation::Similarity, None),
            Err(Error::MissingEntry { x: 0, y: 1 })
        ));
    }

    #[test]
    fn comparator_contract() {
        assert!(Orientation::Similarity.better(3.0, 2.0));
        assert!(!Orientation::Dissimilarity.better(3.0, 2.0));
        assert!(Orientation::Dissimilarity.better(2.0, 3.0));
        assert!(!Orientation::Similarity.better(2.0, 2.0));
    }

    #[test]
    fn duplicate_rows_are_permitted() {
        // items 0 and 1 are indistinguishable from the outside
        let raw = some_rows(&[&[5.0, 4.0, 1.0], &[4.0, 5.0, 1.0], &[1.0, 1.0, 5.0]]);
        assert!(PairMatrix::ingest(raw, Orientation::Similarity, None).is_ok());
    }

    #[test]
    fn label_checks() {
        let rows = [[2.0, 1.0], [1.0, 2.0]].concat();
        assert!(matches!(
            PairMatrix::from_dense(2, rows.clone(), Orientation::Similarity, Some(vec!["a".into()])),
            Err(Error::LabelCount { .. })
        ));
        assert!(matches!(
            PairMatrix::from_dense(2, rows, Orientation::Similarity, Some(vec!["a".into(), "a".into()])),
            Err(Error::DuplicateLabel(_))
        ));
    }
}
