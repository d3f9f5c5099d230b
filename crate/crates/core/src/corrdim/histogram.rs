use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::EpsilonGrid;
use crate::error::{Error, Result};
use crate::metrics::Embedding;

/// Counts of unordered off-diagonal pairs per distance bin.
///
/// Bin `i` holds pairs with distance in `[edges[i], edges[i+1])`. Pairs below
/// the first edge (including exact duplicates) go to `underflow`, pairs at or
/// above the last edge to `overflow`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    pub grid: EpsilonGrid,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub n_points: usize,
    pub n_pairs_total: u64,
}

impl DistanceHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Rows per tile side, sized so two tiles of rows stay cache resident.
fn block_rows(dim: usize) -> usize {
    (16_384 / dim.max(1)).clamp(8, 256)
}

/// Bins all `N(N-1)/2` pair distances of `emb`.
///
/// Work is split into disjoint row-block tiles processed on the current
/// rayon pool; each worker accumulates private integer counters that are
/// summed at the end, so the result does not depend on the thread count.
/// Bin membership is decided on the squared chord length against the grid
/// edges mapped through the metric, which avoids a transcendental per pair.
pub fn pairwise_histogram(emb: &Embedding, grid: &EpsilonGrid) -> Result<DistanceHistogram> {
    let n = emb.n_rows();
    if n < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            actual: n,
        });
    }
    let metric = emb.metric();
    let thresholds: Vec<f64> = grid
        .edges()
        .iter()
        .map(|&e| metric.to_chord_sq(e))
        .collect();
    let n_edges = thresholds.len();

    let b = block_rows(emb.dim());
    let n_blocks = n.div_ceil(b);
    let tiles: Vec<(usize, usize)> = (0..n_blocks)
        .flat_map(|bi| (bi..n_blocks).map(move |bj| (bi, bj)))
        .collect();

    // slot 0 = underflow, 1..n_edges-1 = bins, n_edges = overflow
    let slots = tiles
        .par_iter()
        .fold(
            || vec![0u64; n_edges + 1],
            |mut acc, &(bi, bj)| {
                let (i0, i1) = (bi * b, ((bi + 1) * b).min(n));
                let (j0, j1) = (bj * b, ((bj + 1) * b).min(n));
                for i in i0..i1 {
                    let start = if bi == bj { i + 1 } else { j0 };
                    let mut j = start;
                    while j + 4 <= j1 {
                        for v in emb.chord_sq4(i, [j, j + 1, j + 2, j + 3]) {
                            acc[thresholds.partition_point(|&t| t <= v)] += 1;
                        }
                        j += 4;
                    }
                    for j in j..j1 {
                        let v = emb.chord_sq(i, j);
                        acc[thresholds.partition_point(|&t| t <= v)] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n_edges + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let n_pairs_total = (n as u64) * (n as u64 - 1) / 2;
    Ok(DistanceHistogram {
        grid: grid.clone(),
        counts: slots[1..n_edges].to_vec(),
        underflow: slots[0],
        overflow: slots[n_edges],
        n_points: n,
        n_pairs_total,
    })
}
