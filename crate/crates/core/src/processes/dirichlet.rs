use rand::Rng as _;
use rand_distr::{Distribution, Gamma};

use super::{rng_from_seed, Rng, RowSource};
use crate::error::{Error, Result};
use crate::prob::StateSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSpec {
    alpha: Vec<f64>,
}

impl DirichletSpec {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidParameter("empty concentration vector".into()));
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "concentration parameters must be positive, got {a}"
            )));
        }
        Ok(DirichletSpec { alpha })
    }

    pub fn symmetric(k: usize, alpha: f64) -> Result<Self> {
        DirichletSpec::new(vec![alpha; k])
    }

    /// `α = (3, 0.2, 2.2e-5, …)` over `k` words: one dominant word, one
    /// runner-up, and a long tail.
    pub fn local_fractal(k: usize) -> Result<Self> {
        if k < 3 {
            return Err(Error::InvalidParameter("need at least three words".into()));
        }
        let mut alpha = vec![2.2e-5; k];
        alpha[0] = 3.0;
        alpha[1] = 0.2;
        DirichletSpec::new(alpha)
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// Gamma-normalization sampler that works in log space.
///
/// For shape `a < 1` it uses `X = Y·U^(1/a)` with `Y ~ Gamma(a + 1)` and
/// keeps `ln X = ln Y + ln(U)/a`. With shapes like `2e-5` the direct product
/// underflows to zero for nearly every coordinate; in log space the row is
/// normalized against its largest log-coordinate, so at least one entry is
/// exactly 1 before normalization and a row can never be all zero.
pub struct DirichletSampler {
    shapes: Vec<(Gamma<f64>, f64)>,
    // index into `shapes` per coordinate
    which: Vec<u32>,
    logs: Vec<f64>,
    rng: Rng,
}

impl DirichletSampler {
    pub fn new(spec: &DirichletSpec, seed: u64) -> Self {
        let mut shapes: Vec<(Gamma<f64>, f64)> = Vec::new();
        let mut which = Vec::with_capacity(spec.len());
        for &a in spec.alpha() {
            let pos = match shapes.iter().position(|(_, s)| *s == a) {
                Some(p) => p,
                None => {
                    let base = if a < 1.0 { a + 1.0 } else { a };
                    shapes.push((Gamma::new(base, 1.0).expect("positive shape"), a));
                    shapes.len() - 1
                }
            };
            which.push(pos as u32);
        }
        DirichletSampler {
            shapes,
            which,
            logs: vec![0.0; spec.len()],
            rng: rng_from_seed(seed),
        }
    }
}

impl RowSource for DirichletSampler {
    fn dim(&self) -> usize {
        self.which.len()
    }

    fn next_row(&mut self, out: &mut [f64]) {
        let mut max = f64::NEG_INFINITY;
        for (l, &w) in self.logs.iter_mut().zip(&self.which) {
            let (gamma, a) = &self.shapes[w as usize];
            let y: f64 = gamma.sample(&mut self.rng);
            let mut v = y.ln();
            if *a < 1.0 {
                // U in (0, 1]
                let u: f64 = 1.0 - self.rng.random::<f64>();
                v += u.ln() / a;
            }
            *l = v;
            max = max.max(v);
        }
        let mut sum = 0.0;
        for (o, l) in out.iter_mut().zip(&self.logs) {
            *o = (l - max).exp();
            sum += *o;
        }
        out.iter_mut().for_each(|o| *o /= sum);
    }
}

pub fn gen_dirichlet_iid(spec: &DirichletSpec, n: usize, seed: u64) -> StateSequence {
    let mut src = DirichletSampler::new(spec, seed);
    let k = spec.len();
    let mut data = vec![0.0; k * n];
    for row in data.chunks_exact_mut(k) {
        src.next_row(row);
    }
    StateSequence::new(data, k).expect("n >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{validate, F64_SUM_TOL};

    #[test]
    fn rejects_nonpositive_alpha() {
        assert!(DirichletSpec::new(vec![1.0, 0.0]).is_err());
        assert!(DirichletSpec::new(vec![]).is_err());
        assert!(DirichletSpec::symmetric(3, -1.0).is_err());
    }

    #[test]
    fn flat_two_component_mean() {
        // Dir(1, 1): first coordinate ~ U(0, 1), mean 1/2, sd 1/sqrt(12 n)
        let n = 20_000;
        let s = gen_dirichlet_iid(&DirichletSpec::symmetric(2, 1.0).unwrap(), n, 5);
        let mean = s.rows().map(|r| r[0]).sum::<f64>() / n as f64;
        let sd = (1.0 / 12.0 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sd, "mean {mean}");
    }

    #[test]
    fn moments_match_for_small_shapes() {
        // Dir(a1, a2) marginal of the first coordinate is Beta(a1, a2).
        let (a1, a2) = (0.3, 0.05);
        let n = 40_000;
        let s = gen_dirichlet_iid(&DirichletSpec::new(vec![a1, a2]).unwrap(), n, 8);
        let mean = s.rows().map(|r| r[0]).sum::<f64>() / n as f64;
        let want = a1 / (a1 + a2);
        let var = a1 * a2 / ((a1 + a2).powi(2) * (a1 + a2 + 1.0));
        assert!(
            (mean - want).abs() < 4.0 * (var / n as f64).sqrt(),
            "mean {mean} vs {want}"
        );
    }

    #[test]
    fn tiny_shapes_never_give_zero_rows() {
        let spec = DirichletSpec::symmetric(4, 1e-6).unwrap();
        let s = gen_dirichlet_iid(&spec, 500, 2);
        assert!(validate(&s, F64_SUM_TOL).is_empty());
        // almost all mass on one coordinate
        assert!(s
            .rows()
            .all(|r| r.iter().copied().fold(0.0, f64::max) > 0.99));
    }

    #[test]
    fn local_fractal_spec_rows_are_valid() {
        let spec = DirichletSpec::local_fractal(2000).unwrap();
        let s = gen_dirichlet_iid(&spec, 50, 1);
        assert!(validate(&s, F64_SUM_TOL).is_empty());
        let mean0 = s.rows().map(|r| r[0]).sum::<f64>() / 50.0;
        assert!(mean0 > 0.6, "dominant word mean {mean0}");
    }
}
