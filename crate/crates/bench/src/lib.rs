//! Fixed workloads shared by the benchmarks.

use gpdim::corrdim::EpsilonGrid;
use gpdim::processes::{gen_growth_net, gen_uniform_sphere_noise, GrowthNetConfig};
use gpdim::reduce::{project_sequence, ReductionSpec};
use gpdim::{Embedding, Metric, StateSequence};

/// Uniform points on the positive sphere, `n` rows of width `k`.
pub fn uniform_rows(n: usize, k: usize) -> StateSequence {
    gen_uniform_sphere_noise(k, n, 0xbe7c)
}

/// A BA trajectory of `n` steps folded to `m` columns.
pub fn ba_rows(n: usize, m: usize) -> StateSequence {
    let seq = gen_growth_net(&GrowthNetConfig::ba(n), 0xbe7c).expect("valid config");
    let spec = ReductionSpec::capped(m, seq.dim()).expect("m > 0");
    project_sequence(&seq, &spec).expect("matching widths")
}

/// Embedding plus the default 64-edge grid for it.
pub fn prepared(seq: &StateSequence, metric: Metric) -> (Embedding, EpsilonGrid) {
    let emb = Embedding::new(seq, metric);
    let grid = EpsilonGrid::auto(&emb, 64).expect("non-degenerate rows");
    (emb, grid)
}
