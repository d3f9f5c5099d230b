use serde::{Deserialize, Serialize};

use super::absorbing::AbsorbingMarkovPair;
use crate::error::{Error, Result};

/// A finite distribution over closed texts. Each text is a non-empty list of
/// word indices below `vocab`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextDistribution {
    pub vocab: usize,
    pub texts: Vec<Vec<usize>>,
    pub probs: Vec<f64>,
}

impl TextDistribution {
    pub fn new(vocab: usize, texts: Vec<Vec<usize>>, probs: Vec<f64>) -> Result<Self> {
        if texts.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                expected: texts.len(),
                actual: probs.len(),
            });
        }
        if texts
            .iter()
            .any(|t| t.is_empty() || t.iter().any(|&w| w >= vocab))
        {
            return Err(Error::InvalidParameter(
                "texts must be non-empty and inside the vocabulary".into(),
            ));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidProbability(
                "negative or non-finite text probability".into(),
            ));
        }
        Ok(TextDistribution {
            vocab,
            texts,
            probs,
        })
    }

    /// Every closed text of at most `max_len` tokens under chain `A` of the
    /// pair started from its first initial vector, with exact probabilities.
    /// The mass is short of 1 by the probability of longer texts.
    pub fn from_chain(pair: &AbsorbingMarkovPair, use_b: bool, max_len: usize) -> Self {
        let (m, init) = if use_b {
            (pair.b(), pair.init_b())
        } else {
            (pair.a(), pair.init_a())
        };
        let end = pair.end();
        let mut texts = vec![vec![end]];
        let mut probs = vec![init[end]];
        let mut stack: Vec<(Vec<usize>, f64)> = (0..end).map(|w| (vec![w], init[w])).collect();
        while let Some((prefix, p)) = stack.pop() {
            if prefix.len() + 1 > max_len {
                continue;
            }
            let w = *prefix.last().expect("non-empty prefix");
            let mut closed = prefix.clone();
            closed.push(end);
            texts.push(closed);
            probs.push(p * m[(w, end)]);
            if prefix.len() + 2 <= max_len {
                for v in 0..end {
                    let mut next = prefix.clone();
                    next.push(v);
                    stack.push((next, p * m[(w, v)]));
                }
            }
        }
        TextDistribution {
            vocab: pair.k(),
            texts,
            probs,
        }
    }

    /// `φ(x)`: the marginal distribution of the first word.
    pub fn phi(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.vocab];
        for (t, &q) in self.texts.iter().zip(&self.probs) {
            p[t[0]] += q;
        }
        p
    }
}

/// Largest coordinate of `|φ(αx₁ + (1−α)x₂) − (αφ(x₁) + (1−α)φ(x₂))|`.
///
/// Both distributions must list the same texts in the same order.
pub fn phi_linearity_check(
    x1: &TextDistribution,
    x2: &TextDistribution,
    alpha: f64,
) -> Result<f64> {
    if x1.texts != x2.texts || x1.vocab != x2.vocab {
        return Err(Error::InvalidParameter(
            "distributions are over different text sets".into(),
        ));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let mixed = TextDistribution {
        vocab: x1.vocab,
        texts: x1.texts.clone(),
        probs: x1
            .probs
            .iter()
            .zip(&x2.probs)
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect(),
    };
    let lhs = mixed.phi();
    let (p1, p2) = (x1.phi(), x2.phi());
    Ok(lhs
        .iter()
        .zip(p1.iter().zip(&p2))
        .map(|(l, (a, b))| (l - (alpha * a + (1.0 - alpha) * b)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::rng_from_seed;

    fn pair_texts(seed: u64) -> (TextDistribution, TextDistribution) {
        let mut rng = rng_from_seed(seed);
        let pair = AbsorbingMarkovPair::random(4, 0.3, false, &mut rng).unwrap();
        (
            TextDistribution::from_chain(&pair, false, 6),
            TextDistribution::from_chain(&pair, true, 6),
        )
    }

    #[test]
    fn endpoints_are_exact() {
        let (x1, x2) = pair_texts(1);
        assert_eq!(phi_linearity_check(&x1, &x2, 0.0).unwrap(), 0.0);
        assert_eq!(phi_linearity_check(&x1, &x2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn interior_mixture_is_linear() {
        for seed in 0..5 {
            let (x1, x2) = pair_texts(seed);
            assert!(phi_linearity_check(&x1, &x2, 0.3).unwrap() < 1e-12);
        }
    }

    #[test]
    fn phi_recovers_initial_vector() {
        let mut rng = rng_from_seed(4);
        let pair = AbsorbingMarkovPair::random(3, 0.4, false, &mut rng).unwrap();
        let x = TextDistribution::from_chain(&pair, false, 14);
        for (got, want) in x.phi().iter().zip(pair.init_a()) {
            // only texts longer than 14 tokens are missing
            assert!(want - got >= -1e-15 && want - got < 0.6f64.powi(13));
        }
    }

    #[test]
    fn mismatched_sets_rejected() {
        let (x1, _) = pair_texts(2);
        let mut x2 = x1.clone();
        x2.texts.pop();
        x2.probs.pop();
        assert!(phi_linearity_check(&x1, &x2, 0.5).is_err());
        assert!(TextDistribution::new(2, vec![vec![2]], vec![1.0]).is_err());
    }
}
