//! Variance-mean scaling of word frequencies under pairwise context merging.
//!
//! For each mean level `μ`, `n_contexts` frequencies are drawn from a gamma
//! law with mean `μ` and variance `β μ^γ`, clipped at 1. Adjacent contexts
//! `(2l, 2l+1)` are then merged by averaging. The exponent is the OLS slope
//! of `ln σ²` against `ln μ` across levels, fitted before and after merging.

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::corrdim::ols;
use crate::error::{Error, Result};
use crate::processes::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    pub gamma_in: f64,
    pub beta: f64,
    /// Contexts per mean level (even).
    pub n_contexts: usize,
    pub mean_range: (f64, f64),
    pub n_levels: usize,
}

impl GammaConfig {
    pub fn new(gamma_in: f64) -> Self {
        GammaConfig {
            gamma_in,
            beta: 1e-4,
            n_contexts: 20_000,
            mean_range: (1e-3, 1e-1),
            n_levels: 8,
        }
    }

    fn check(&self) -> Result<()> {
        if !(0.5..=2.0).contains(&self.gamma_in) {
            return Err(Error::InvalidParameter(format!(
                "gamma_in must lie in [0.5, 2], got {}",
                self.gamma_in
            )));
        }
        if self.n_contexts < 1000 || !self.n_contexts.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "n_contexts must be even and >= 1000".into(),
            ));
        }
        let (lo, hi) = self.mean_range;
        if !(lo > 0.0 && hi > lo && hi < 1.0) {
            return Err(Error::InvalidParameter(
                "mean_range must satisfy 0 < lo < hi < 1".into(),
            ));
        }
        if !(self.beta > 0.0) || self.n_levels < 2 {
            return Err(Error::InvalidParameter(
                "beta must be > 0 and n_levels >= 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaLevel {
    pub mu: f64,
    pub mean_before: f64,
    pub var_before: f64,
    pub mean_after: f64,
    pub var_after: f64,
    pub clipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaExperiment {
    pub n_contexts: usize,
    pub gamma_in: f64,
    pub gamma_before: f64,
    pub gamma_after: f64,
    pub levels: Vec<GammaLevel>,
    /// Sampled frequencies per level, before merging.
    #[serde(skip)]
    pub frequencies: Vec<Vec<f64>>,
}

impl GammaExperiment {
    /// Largest relative change of a level mean under merging.
    pub fn max_mean_shift(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| ((l.mean_after - l.mean_before) / l.mean_before).abs())
            .fold(0.0, f64::max)
    }

    /// `σ̄² / σ²` per level; tends to 1/2.
    pub fn variance_ratios(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|l| l.var_after / l.var_before)
            .collect()
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

pub fn gamma_merge_experiment(config: &GammaConfig, seed: u64) -> Result<GammaExperiment> {
    config.check()?;
    let mut rng = rng_from_seed(seed);
    let (lo, hi) = config.mean_range;
    let step = (hi / lo).ln() / (config.n_levels - 1) as f64;

    let mut levels = Vec::with_capacity(config.n_levels);
    let mut frequencies = Vec::with_capacity(config.n_levels);
    for i in 0..config.n_levels {
        let mu = lo * (step * i as f64).exp();
        let var = config.beta * mu.powf(config.gamma_in);
        let shape = mu * mu / var;
        let scale = var / mu;
        let law = Gamma::new(shape, scale)
            .map_err(|e| Error::InvalidParameter(format!("gamma law at mu={mu}: {e}")))?;
        let mut clipped = 0;
        let x: Vec<f64> = (0..config.n_contexts)
            .map(|_| {
                let v: f64 = law.sample(&mut rng);
                if v > 1.0 {
                    clipped += 1;
                    1.0
                } else {
                    v
                }
            })
            .collect();
        let merged: Vec<f64> = x.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        let (mean_before, var_before) = mean_var(&x);
        let (mean_after, var_after) = mean_var(&merged);
        levels.push(GammaLevel {
            mu,
            mean_before,
            var_before,
            mean_after,
            var_after,
            clipped,
        });
        frequencies.push(x);
    }

    let slope = |f: fn(&GammaLevel) -> (f64, f64)| {
        let (x, y): (Vec<f64>, Vec<f64>) = levels
            .iter()
            .map(|l| {
                let (m, v) = f(l);
                (m.ln(), v.ln())
            })
            .unzip();
        ols(&x, &y).slope
    };
    let gamma_before = slope(|l| (l.mean_before, l.var_before));
    let gamma_after = slope(|l| (l.mean_after, l.var_after));
    Ok(GammaExperiment {
        n_contexts: config.n_contexts,
        gamma_in: config.gamma_in,
        gamma_before,
        gamma_after,
        levels,
        frequencies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_survives_merging() {
        for g in [0.8, 1.0, 1.5, 2.0] {
            let e = gamma_merge_experiment(&GammaConfig::new(g), 7).unwrap();
            assert!((e.gamma_before - g).abs() < 0.05, "{g}: {}", e.gamma_before);
            assert!((e.gamma_after - g).abs() < 0.05, "{g}: {}", e.gamma_after);
        }
    }

    #[test]
    fn merging_halves_variance_and_keeps_mean() {
        let e = gamma_merge_experiment(&GammaConfig::new(2.0), 3).unwrap();
        assert!(e.max_mean_shift() < 1e-12);
        for r in e.variance_ratios() {
            // σ̄²/σ² has relative standard error about sqrt(2/L + kurtosis/L)
            assert!((r - 0.5).abs() < 0.05, "{r}");
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(gamma_merge_experiment(&GammaConfig::new(3.0), 1).is_err());
        let odd = GammaConfig {
            n_contexts: 1001,
            ..GammaConfig::new(1.0)
        };
        assert!(gamma_merge_experiment(&odd, 1).is_err());
    }
}
