//! Probability vectors, sequences of them, and the row filters used to
//! separate high-entropy (global) steps from single-word-dominated (local)
//! steps.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance for data stored as 32-bit floats.
pub const F32_SUM_TOL: f64 = 1e-4;
/// Row-sum tolerance for data generated and stored as 64-bit floats.
pub const F64_SUM_TOL: f64 = 1e-9;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(values: Vec<f64>, tolerance: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidProbability("empty vector".into()));
        }
        if let Some(kind) = check_row(&values, tolerance).into_iter().next() {
            return Err(Error::InvalidProbability(kind.to_string()));
        }
        Ok(ProbVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ProbVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// An ordered, non-empty list of rows sharing one dimension, stored row-major.
///
/// Construction checks shape only. Use [`validate`] for the simplex
/// constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    data: Vec<f64>,
    dim: usize,
}

impl StateSequence {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::TooFewPoints {
                needed: 1,
                actual: 0,
            });
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "payload of {} values is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        Ok(StateSequence { data, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        StateSequence::new(data, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_steps(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// First `n` rows (all of them if `n` exceeds the length).
    pub fn prefix(&self, n: usize) -> Result<StateSequence> {
        let n = n.min(self.n_steps());
        StateSequence::new(self.data[..n * self.dim].to_vec(), self.dim)
    }

    pub fn select(&self, indices: &[usize]) -> Result<StateSequence> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        StateSequence::new(data, self.dim)
    }

    /// Divides every row by its sum. Rows summing to zero are left untouched.
    pub fn renormalized(&self) -> StateSequence {
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.dim) {
            let s: f64 = row.iter().sum();
            if s > 0.0 && s.is_finite() {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
        StateSequence {
            data,
            dim: self.dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    NonFinite { index: usize },
    NegativeEntry { index: usize, value: f64 },
    SumOff { sum: f64 },
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::NonFinite { index } => write!(f, "non-finite entry at {index}"),
            ViolationKind::NegativeEntry { index, value } => {
                write!(f, "negative entry {value} at {index}")
            }
            ViolationKind::SumOff { sum } => write!(f, "sums to {sum}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: usize,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}", self.row, self.kind)
    }
}

fn check_row(row: &[f64], tolerance: f64) -> Vec<ViolationKind> {
    let mut out = Vec::new();
    if let Some(index) = row.iter().position(|v| !v.is_finite()) {
        out.push(ViolationKind::NonFinite { index });
        return out;
    }
    if let Some((index, &value)) = row.iter().enumerate().find(|(_, v)| **v < 0.0) {
        out.push(ViolationKind::NegativeEntry { index, value });
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        out.push(ViolationKind::SumOff { sum });
    }
    out
}

/// Lists every row that breaks the simplex constraints at `tolerance`.
pub fn validate(seq: &StateSequence, tolerance: f64) -> Vec<Violation> {
    seq.rows()
        .enumerate()
        .flat_map(|(row, r)| {
            check_row(r, tolerance)
                .into_iter()
                .map(move |kind| Violation { row, kind })
        })
        .collect()
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(p: &ProbVector) -> f64 {
    entropy_bits(p.as_slice())
}

pub(crate) fn entropy_bits(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum();
    // -0.0 for one-hot rows
    h.max(0.0)
}

/// Row selection rule.
///
/// Without `argmax_word` a row is kept when its largest entry is strictly
/// below `eta` (the high-entropy, global regime). With `argmax_word` a row is
/// kept when that word holds the largest entry and the entry strictly exceeds
/// `eta` (a single word's local region). The entropy band, when set, applies
/// in both modes and is inclusive. Entropies are in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub eta: f64,
    pub entropy_min: Option<f64>,
    pub entropy_max: Option<f64>,
    pub argmax_word: Option<usize>,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec::eta(0.5)
    }
}

impl FilterSpec {
    pub fn eta(eta: f64) -> Self {
        FilterSpec {
            eta,
            entropy_min: None,
            entropy_max: None,
            argmax_word: None,
        }
    }

    pub fn with_entropy(mut self, min: Option<f64>, max: Option<f64>) -> Self {
        self.entropy_min = min;
        self.entropy_max = max;
        self
    }

    pub fn with_argmax(mut self, word: usize) -> Self {
        self.argmax_word = Some(word);
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        for h in [self.entropy_min, self.entropy_max].into_iter().flatten() {
            if !(h >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "entropy bounds must be >= 0, got {h}"
                )));
            }
        }
        if let (Some(lo), Some(hi)) = (self.entropy_min, self.entropy_max) {
            if lo > hi {
                return Err(Error::InvalidParameter(format!(
                    "entropy_min {lo} exceeds entropy_max {hi}"
                )));
            }
        }
        Ok(())
    }

    /// Whether a single row passes. `check` is assumed to have succeeded.
    pub fn keeps(&self, row: &[f64]) -> bool {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let by_max = match self.argmax_word {
            None => max < self.eta,
            Some(w) => w < row.len() && row[w] == max && max > self.eta,
        };
        if !by_max {
            return false;
        }
        if self.entropy_min.is_none() && self.entropy_max.is_none() {
            return true;
        }
        let h = entropy_bits(row);
        self.entropy_min.is_none_or(|lo| h >= lo) && self.entropy_max.is_none_or(|hi| h <= hi)
    }
}

/// Rows kept by a filter, in original order.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    /// `None` when no row survived.
    pub sequence: Option<StateSequence>,
    /// Indices into the input sequence, strictly increasing.
    pub retained: Vec<usize>,
    pub total: usize,
}

impl FilterResult {
    pub fn is_empty(&self) -> bool {
        self.retained.is_empty()
    }

    pub fn retained_fraction(&self) -> f64 {
        self.retained.len() as f64 / self.total as f64
    }
}

pub fn apply_filter(seq: &StateSequence, spec: &FilterSpec) -> Result<FilterResult> {
    spec.check()?;
    let retained: Vec<usize> = seq
        .rows()
        .enumerate()
        .filter(|(_, r)| spec.keeps(r))
        .map(|(i, _)| i)
        .collect();
    let sequence = if retained.is_empty() {
        None
    } else {
        Some(seq.select(&retained)?)
    };
    Ok(FilterResult {
        sequence,
        retained,
        total: seq.n_steps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(rows: &[&[f64]]) -> StateSequence {
        StateSequence::from_rows(rows).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(validate(&seq(&[&[0.5, 0.5]]), F64_SUM_TOL).is_empty());

        let v = validate(&seq(&[&[0.5, 0.6]]), F64_SUM_TOL);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].row, 0);
        match v[0].kind {
            ViolationKind::SumOff { sum } => assert!((sum - 1.1).abs() < 1e-12),
            ref k => panic!("unexpected {k:?}"),
        }

        let v = validate(&seq(&[&[-0.1, 1.1]]), F64_SUM_TOL);
        assert_eq!(v.len(), 1);
        assert!(matches!(
            v[0].kind,
            ViolationKind::NegativeEntry { index: 0, .. }
        ));
    }

    #[test]
    fn validate_respects_tier() {
        let s = seq(&[&[0.5, 0.50005]]);
        assert!(validate(&s, F32_SUM_TOL).is_empty());
        assert_eq!(validate(&s, F64_SUM_TOL).len(), 1);
    }

    #[test]
    fn nan_rows_are_reported() {
        let v = validate(&seq(&[&[0.5, 0.5], &[f64::NAN, 1.0]]), F64_SUM_TOL);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].row, 1);
    }

    #[test]
    fn entropy_examples() {
        let h = |v: &[f64]| shannon_entropy(&ProbVector::new(v.to_vec(), F64_SUM_TOL).unwrap());
        assert_eq!(h(&[1.0, 0.0, 0.0, 0.0]), 0.0);
        assert!((h(&[0.25; 4]) - 2.0).abs() < 1e-15);
        assert!((h(&[0.5, 0.5, 0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_vector_is_rejected() {
        assert!(ProbVector::new(vec![0.3, 0.3], F64_SUM_TOL).is_err());
        assert!(ProbVector::new(vec![], F64_SUM_TOL).is_err());
    }

    #[test]
    fn global_filter_is_strict() {
        let s = seq(&[&[0.6, 0.4], &[0.4, 0.6], &[0.45, 0.55]]);
        let r = apply_filter(&s, &FilterSpec::eta(0.5)).unwrap();
        assert!(r.is_empty());
        assert!(r.sequence.is_none());
        let r = apply_filter(&s, &FilterSpec::eta(0.7)).unwrap();
        assert_eq!(r.retained, vec![0, 1, 2]);
        // ties at eta are excluded
        let r = apply_filter(&seq(&[&[0.5, 0.5]]), &FilterSpec::eta(0.5)).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn argmax_filter() {
        let s = seq(&[&[0.9, 0.1], &[0.3, 0.7]]);
        let r = apply_filter(&s, &FilterSpec::eta(0.5).with_argmax(0)).unwrap();
        assert_eq!(r.retained, vec![0]);
        let r = apply_filter(&s, &FilterSpec::eta(0.9).with_argmax(0)).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn entropy_band() {
        let s = seq(&[&[0.25; 4], &[0.5, 0.5, 0.0, 0.0], &[0.7, 0.1, 0.1, 0.1]]);
        let f = FilterSpec::eta(1.0).with_entropy(Some(1.5), None);
        assert_eq!(apply_filter(&s, &f).unwrap().retained, vec![0]);
        let f = FilterSpec::eta(1.0).with_entropy(None, Some(1.0));
        assert_eq!(apply_filter(&s, &f).unwrap().retained, vec![1]);
    }

    #[test]
    fn bad_filter_specs() {
        let s = seq(&[&[0.5, 0.5]]);
        assert!(apply_filter(&s, &FilterSpec::eta(0.0)).is_err());
        assert!(apply_filter(&s, &FilterSpec::eta(1.5)).is_err());
        let f = FilterSpec::eta(0.5).with_entropy(Some(3.0), Some(2.0));
        assert!(apply_filter(&s, &f).is_err());
    }

    #[test]
    fn renormalize_divides_by_row_sum() {
        let s = seq(&[&[1.0, 3.0]]).renormalized();
        assert_eq!(s.row(0), &[0.25, 0.75]);
    }

    fn arb_rows() -> impl Strategy<Value = StateSequence> {
        (2usize..6).prop_flat_map(|k| {
            prop::collection::vec(prop::collection::vec(0.001f64..1.0, k), 1..40).prop_map(|rows| {
                let rows: Vec<Vec<f64>> = rows
                    .into_iter()
                    .map(|r| {
                        let s: f64 = r.iter().sum();
                        r.into_iter().map(|v| v / s).collect()
                    })
                    .collect();
                StateSequence::from_rows(&rows).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn filter_idempotent_and_ordered(s in arb_rows(), eta in 0.2f64..1.0, hmin in 0.0f64..2.0) {
            let spec = FilterSpec::eta(eta).with_entropy(Some(hmin), None);
            let once = apply_filter(&s, &spec).unwrap();
            prop_assert!(once.retained.windows(2).all(|w| w[0] < w[1]));
            if let Some(kept) = &once.sequence {
                let twice = apply_filter(kept, &spec).unwrap();
                prop_assert_eq!(twice.retained.len(), kept.n_steps());
                prop_assert_eq!(twice.sequence.as_ref(), Some(kept));
            }
        }

        #[test]
        fn entropy_bounded_and_permutation_invariant(s in arb_rows(), rot in 0usize..7) {
            let k = s.dim();
            for r in s.rows() {
                let h = entropy_bits(r);
                prop_assert!(h >= 0.0 && h <= (k as f64).log2() + 1e-12);
                let mut p = r.to_vec();
                p.rotate_left(rot % k);
                p.reverse();
                prop_assert!((entropy_bits(&p) - h).abs() < 1e-12);
            }
        }
    }
}
