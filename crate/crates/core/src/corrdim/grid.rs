use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Embedding;

/// Default number of log-spaced edges.
pub const DEFAULT_EDGES: usize = 64;
/// Rows sampled (evenly strided) when choosing the grid range.
pub const RANGE_SAMPLE: usize = 1000;

/// Bin edges for pair distances: strictly increasing and positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGrid {
    edges: Vec<f64>,
}

impl EpsilonGrid {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidParameter(
                "a grid needs at least two edges".into(),
            ));
        }
        if !edges.iter().all(|e| e.is_finite() && *e > 0.0) {
            return Err(Error::InvalidParameter(
                "grid edges must be finite and > 0".into(),
            ));
        }
        if !edges.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "grid edges must be strictly increasing".into(),
            ));
        }
        Ok(EpsilonGrid { edges })
    }

    pub fn log_spaced(lo: f64, hi: f64, n_edges: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "log grid needs 0 < lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n_edges < 2 {
            return Err(Error::InvalidParameter(
                "a grid needs at least two edges".into(),
            ));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (n_edges - 1) as f64;
        let mut edges: Vec<f64> = (0..n_edges).map(|i| (a + step * i as f64).exp()).collect();
        edges[0] = lo;
        edges[n_edges - 1] = hi;
        EpsilonGrid::from_edges(edges)
    }

    /// Log-spaced grid from the smallest nonzero to the largest pair distance
    /// among an evenly strided sample of at most [`RANGE_SAMPLE`] rows.
    pub fn auto(emb: &Embedding, n_edges: usize) -> Result<Self> {
        let n = emb.n_rows();
        if n < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                actual: n,
            });
        }
        let take = n.min(RANGE_SAMPLE);
        let idx: Vec<usize> = (0..take).map(|i| i * n / take).collect();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                let d = emb.distance(i, j);
                if d > 0.0 {
                    lo = lo.min(d);
                }
                hi = hi.max(d);
            }
        }
        if !lo.is_finite() {
            return Err(Error::InvalidParameter(
                "all sampled pair distances are zero; the sequence is constant".into(),
            ));
        }
        // the sampled maximum should land inside the last bin
        let mut hi = hi * (1.0 + 1e-9);
        if hi <= lo {
            lo *= 0.5;
            hi *= 2.0;
        }
        EpsilonGrid::log_spaced(lo, hi, n_edges)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Same bins with every edge multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        EpsilonGrid::from_edges(self.edges.iter().map(|e| e * factor).collect())
    }
}
