use rand_distr::{Distribution, StandardNormal};

use super::{rng_from_seed, Rng, RowSource};
use crate::prob::StateSequence;

/// Uniform draws on the positive orthant of the unit sphere in `√p`
/// coordinates: normalize a standard Gaussian vector, fold it into the
/// orthant with `abs`, and square.
pub struct UniformSphereNoise {
    k: usize,
    rng: Rng,
}

impl UniformSphereNoise {
    pub fn new(k: usize, seed: u64) -> Self {
        assert!(k >= 2, "uniform sphere noise needs K >= 2");
        UniformSphereNoise {
            k,
            rng: rng_from_seed(seed),
        }
    }
}

impl RowSource for UniformSphereNoise {
    fn dim(&self) -> usize {
        self.k
    }

    fn next_row(&mut self, out: &mut [f64]) {
        let mut norm_sq = 0.0;
        for v in out.iter_mut() {
            let g: f64 = StandardNormal.sample(&mut self.rng);
            *v = g * g;
            norm_sq += *v;
        }
        if norm_sq == 0.0 {
            // probability zero; keep the row valid anyway
            out.fill(1.0 / self.k as f64);
            return;
        }
        out.iter_mut().for_each(|v| *v /= norm_sq);
    }
}

pub fn gen_uniform_sphere_noise(k: usize, n: usize, seed: u64) -> StateSequence {
    let mut src = UniformSphereNoise::new(k, seed);
    let mut data = vec![0.0; k * n];
    for row in data.chunks_exact_mut(k) {
        src.next_row(row);
    }
    StateSequence::new(data, k).expect("n >= 1")
}
