//! Distances between points of the simplex.
//!
//! Fisher-Rao distance is twice the Bhattacharyya angle. In square-root
//! coordinates every distribution is a unit vector on the positive orthant,
//! and the distance is the great-circle arc between the two vectors. The
//! pairwise kernel uses the equivalent chord form `4 asin(|√p - √q| / 2)`,
//! which keeps full relative precision for nearby points where
//! `2 acos(<√p, √q>)` cancels.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::StateSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    FisherRao,
    Euclidean,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::FisherRao => "fisher-rao",
            Metric::Euclidean => "euclidean",
        }
    }

    /// Distance between two rows of an [`Embedding`] built for this metric,
    /// given the squared Euclidean norm of their difference.
    pub fn from_chord_sq(self, chord_sq: f64) -> f64 {
        match self {
            Metric::FisherRao => {
                let half = 0.5 * chord_sq.max(0.0).sqrt();
                (4.0 * half.min(1.0).asin()).min(PI)
            }
            Metric::Euclidean => chord_sq.max(0.0).sqrt(),
        }
    }

    /// Inverse of [`Metric::from_chord_sq`], monotone in `distance`.
    pub fn to_chord_sq(self, distance: f64) -> f64 {
        match self {
            Metric::FisherRao => {
                let s = 2.0 * (0.25 * distance.clamp(0.0, 2.0 * PI)).sin();
                s * s
            }
            Metric::Euclidean => distance * distance,
        }
    }

    pub fn distance(self, p: &[f64], q: &[f64]) -> Result<f64> {
        match self {
            Metric::FisherRao => fisher_rao(p, q),
            Metric::Euclidean => euclidean(p, q),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fisher-rao" | "fr" => Ok(Metric::FisherRao),
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

fn same_len(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(())
}

/// `Σ √(p_w q_w)`, clamped into `[0, 1]`.
pub fn bhattacharyya_coeff(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    let bc: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    Ok(bc.clamp(0.0, 1.0))
}

/// Fisher-Rao distance in radians, in `[0, π]`.
pub fn fisher_rao(p: &[f64], q: &[f64]) -> Result<f64> {
    Ok(2.0 * bhattacharyya_coeff(p, q)?.acos())
}

pub fn euclidean(p: &[f64], q: &[f64]) -> Result<f64> {
    same_len(p, q)?;
    Ok(p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Rows of a sequence mapped into the coordinates a metric works in:
/// `√p` for Fisher-Rao, `p` itself for Euclidean.
///
/// Each row also records its support length (one past the last nonzero
/// coordinate) so the kernel can skip shared trailing zeros. Skipping them
/// does not change any sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    metric: Metric,
    dim: usize,
    data: Vec<f64>,
    support: Vec<usize>,
}

/// Square-root embedding: rows are unit vectors and
/// `dot(t, s) == bhattacharyya_coeff(p_t, p_s)`.
pub type SqrtEmbedding = Embedding;

pub fn sqrt_embed(seq: &StateSequence) -> SqrtEmbedding {
    Embedding::new(seq, Metric::FisherRao)
}

impl Embedding {
    pub fn new(seq: &StateSequence, metric: Metric) -> Self {
        let data: Vec<f64> = match metric {
            Metric::FisherRao => seq.as_flat().iter().map(|v| v.max(0.0).sqrt()).collect(),
            Metric::Euclidean => seq.as_flat().to_vec(),
        };
        let dim = seq.dim();
        let support = data
            .chunks_exact(dim)
            .map(|r| r.iter().rposition(|&v| v != 0.0).map_or(0, |i| i + 1))
            .collect();
        Embedding {
            metric,
            dim,
            data,
            support,
        }
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.support.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[cfg(test)]
    pub(crate) fn support(&self, i: usize) -> usize {
        self.support[i]
    }

    pub fn dot(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Squared Euclidean norm of `row(i) - row(j)`.
    pub fn chord_sq(&self, i: usize, j: usize) -> f64 {
        let len = self.support[i].max(self.support[j]);
        squared_diff(&self.row(i)[..len], &self.row(j)[..len])
    }

    /// [`Embedding::chord_sq`] for `i` against four rows at once.
    pub(crate) fn chord_sq4(&self, i: usize, j: [usize; 4]) -> [f64; 4] {
        let len = j
            .iter()
            .fold(self.support[i], |m, &k| m.max(self.support[k]));
        let a = &self.row(i)[..len];
        squared_diff4(a, j.map(|k| &self.row(k)[..len]))
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.from_chord_sq(self.chord_sq(i, j))
    }

    /// Keeps the listed rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Embedding {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Embedding {
            metric: self.metric,
            dim: self.dim,
            data,
            support: rows.iter().map(|&i| self.support[i]).collect(),
        }
    }
}

const LANES: usize = 16;

#[inline(always)]
fn fold_lanes(mut acc: [f64; LANES]) -> f64 {
    let mut width = LANES;
    while width > 1 {
        width /= 2;
        for l in 0..width {
            acc[l] += acc[l + width];
        }
    }
    acc[0]
}

/// Sum of squared differences with a fixed lane assignment: coordinate `i`
/// always accumulates into lane `i % 16`, and lanes are combined in a fixed
/// pairwise tree. The result is therefore independent of the instruction set
/// chosen at runtime and unchanged by appending common zeros.
#[inline(always)]
fn squared_diff_body(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    for (l, (x, y)) in ra.iter().zip(rb).enumerate() {
        let d = x - y;
        acc[l] += d * d;
    }
    fold_lanes(acc)
}

/// Four pairs `(a, b[k])` at once, each bit-identical to
/// [`squared_diff_body`]: the per-pair arithmetic is unchanged, only the
/// loads of `a` are shared.
#[inline(always)]
fn squared_diff4_body(a: &[f64], b: [&[f64]; 4]) -> [f64; 4] {
    let n = a.len();
    let mut acc = [[0.0f64; LANES]; 4];
    let full = n - n % LANES;
    let mut i = 0;
    while i < full {
        let x = &a[i..i + LANES];
        for k in 0..4 {
            let y = &b[k][i..i + LANES];
            for l in 0..LANES {
                let d = x[l] - y[l];
                acc[k][l] += d * d;
            }
        }
        i += LANES;
    }
    for k in 0..4 {
        for (l, j) in (full..n).enumerate() {
            let d = a[j] - b[k][j];
            acc[k][l] += d * d;
        }
    }
    acc.map(fold_lanes)
}

macro_rules! kernel_variants {
    ($($name:ident, $name4:ident, $feat:literal;)*) => {$(
        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = $feat)]
        unsafe fn $name(a: &[f64], b: &[f64]) -> f64 {
            squared_diff_body(a, b)
        }

        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = $feat)]
        unsafe fn $name4(a: &[f64], b: [&[f64]; 4]) -> [f64; 4] {
            squared_diff4_body(a, b)
        }
    )*};
}

kernel_variants! {
    squared_diff_avx2, squared_diff4_avx2, "avx2";
    squared_diff_avx512, squared_diff4_avx512, "avx512f";
}

fn squared_diff_portable(a: &[f64], b: &[f64]) -> f64 {
    squared_diff_body(a, b)
}

fn squared_diff4_portable(a: &[f64], b: [&[f64]; 4]) -> [f64; 4] {
    squared_diff4_body(a, b)
}

type SqDiffFn = unsafe fn(&[f64], &[f64]) -> f64;
type SqDiff4Fn = unsafe fn(&[f64], [&[f64]; 4]) -> [f64; 4];

fn select_kernel() -> (SqDiffFn, SqDiff4Fn) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx512f") {
            return (squared_diff_avx512, squared_diff4_avx512);
        }
        if std::is_x86_feature_detected!("avx2") {
            return (squared_diff_avx2, squared_diff4_avx2);
        }
    }
    (squared_diff_portable, squared_diff4_portable)
}

fn kernels() -> (SqDiffFn, SqDiff4Fn) {
    static KERNEL: OnceLock<(SqDiffFn, SqDiff4Fn)> = OnceLock::new();
    *KERNEL.get_or_init(select_kernel)
}

pub(crate) fn squared_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    // SAFETY: the selected variant only uses features detected at runtime.
    unsafe { kernels().0(a, b) }
}

/// Squared differences between `a` and four rows of the same length.
pub(crate) fn squared_diff4(a: &[f64], b: [&[f64]; 4]) -> [f64; 4] {
    assert!(b.iter().all(|r| r.len() == a.len()));
    // SAFETY: as above.
    unsafe { kernels().1(a, b) }
}
