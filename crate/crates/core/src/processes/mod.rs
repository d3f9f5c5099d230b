//! Seeded generators of probability-vector trajectories.
//!
//! Every generator draws from a `ChaCha12Rng` seeded with
//! `SeedableRng::seed_from_u64(seed)`, so a seed pins the output bit for bit.
//! Generators produce one row at a time through [`RowSource`], which lets
//! [`materialize`] filter and reduce full-vocabulary rows without ever
//! holding the full-width sequence in memory.

mod dirichlet;
mod growth;
mod markov;
mod uniform;

pub use dirichlet::{gen_dirichlet_iid, DirichletSampler, DirichletSpec};
pub use growth::{gen_growth_net, GrowthNet, GrowthNetConfig, GrowthNetState};
pub use markov::{gen_markov, MarkovChain, MarkovSource};
pub use uniform::{gen_uniform_sphere_noise, UniformSphereNoise};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::Result;
use crate::prob::{FilterSpec, StateSequence};
use crate::reduce::ReductionSpec;

pub type Rng = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// A generator that writes successive rows into a caller buffer.
pub trait RowSource {
    fn dim(&self) -> usize;
    /// Fills `out` (length [`RowSource::dim`]) with the next row.
    fn next_row(&mut self, out: &mut [f64]);
}

/// Rows that survived [`materialize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Materialized {
    /// `None` when the filter rejected everything.
    pub sequence: Option<StateSequence>,
    /// Step indices (0-based) of the kept rows.
    pub retained: Vec<usize>,
    pub generated: usize,
}

/// Draws `n` rows, applies `filter` to each full-width row, then groups the
/// kept rows by index mod `m_groups` (skipped when `None` or `>= dim`).
pub fn materialize<S: RowSource + ?Sized>(
    source: &mut S,
    n: usize,
    filter: Option<&FilterSpec>,
    m_groups: Option<usize>,
) -> Result<Materialized> {
    if let Some(f) = filter {
        f.check()?;
    }
    let k = source.dim();
    let reduction = match m_groups {
        Some(m) if m < k => Some(ReductionSpec::new(m, k)?),
        _ => None,
    };
    let out_dim = reduction.map_or(k, |r| r.m_groups);
    let mut row = vec![0.0; k];
    let mut data = Vec::new();
    let mut retained = Vec::new();
    for t in 0..n {
        source.next_row(&mut row);
        if filter.is_some_and(|f| !f.keeps(&row)) {
            continue;
        }
        retained.push(t);
        match reduction {
            Some(r) => {
                let start = data.len();
                data.resize(start + out_dim, 0.0);
                r.project_into(&row, &mut data[start..])?;
            }
            None => data.extend_from_slice(&row),
        }
    }
    let sequence = if retained.is_empty() {
        None
    } else {
        Some(StateSequence::new(data, out_dim)?)
    };
    Ok(Materialized {
        sequence,
        retained,
        generated: n,
    })
}
