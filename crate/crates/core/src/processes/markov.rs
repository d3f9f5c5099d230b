use rand::Rng as _;

use super::{rng_from_seed, Rng, RowSource};
use crate::error::{Error, Result};
use crate::prob::{ProbVector, StateSequence, F64_SUM_TOL};

/// First-order chain: `transition[i][j]` is the probability that word `j`
/// follows word `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    k: usize,
    transition: Vec<f64>,
    initial: ProbVector,
}

impl MarkovChain {
    pub fn new(transition: Vec<Vec<f64>>, initial: Vec<f64>) -> Result<Self> {
        let k = transition.len();
        if k == 0 {
            return Err(Error::InvalidParameter("empty transition matrix".into()));
        }
        let mut flat = Vec::with_capacity(k * k);
        for (i, row) in transition.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    actual: row.len(),
                });
            }
            ProbVector::new(row.clone(), F64_SUM_TOL)
                .map_err(|e| Error::InvalidParameter(format!("transition row {i}: {e}")))?;
            flat.extend_from_slice(row);
        }
        if initial.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: initial.len(),
            });
        }
        let initial = ProbVector::new(initial, F64_SUM_TOL)?;
        Ok(MarkovChain {
            k,
            transition: flat,
            initial,
        })
    }

    /// Chain with `Dir(1, …, 1)` rows and a uniform start, for tests and demos.
    pub fn random(k: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let e: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            })
            .collect();
        MarkovChain::new(rows, vec![1.0 / k as f64; k]).expect("valid by construction")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.transition[i * self.k..(i + 1) * self.k]
    }

    pub fn initial(&self) -> &[f64] {
        self.initial.as_slice()
    }
}

fn sample_index(p: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random::<f64>() * p.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return i;
        }
    }
    // rounding left u at the very top: last word with mass
    p.iter().rposition(|&v| v > 0.0).unwrap_or(0)
}

/// Emits the exact next-word distribution at every step: the initial vector
/// first, then the transition row of the previously sampled word.
pub struct MarkovSource<'a> {
    chain: &'a MarkovChain,
    rng: Rng,
    prev: Option<usize>,
    words: Vec<usize>,
}

impl<'a> MarkovSource<'a> {
    pub fn new(chain: &'a MarkovChain, seed: u64) -> Self {
        MarkovSource {
            chain,
            rng: rng_from_seed(seed),
            prev: None,
            words: Vec::new(),
        }
    }

    pub fn words(&self) -> &[usize] {
        &self.words
    }
}

impl RowSource for MarkovSource<'_> {
    fn dim(&self) -> usize {
        self.chain.k
    }

    fn next_row(&mut self, out: &mut [f64]) {
        let row = match self.prev {
            None => self.chain.initial(),
            Some(w) => self.chain.row(w),
        };
        out.copy_from_slice(row);
        let w = sample_index(row, &mut self.rng);
        self.words.push(w);
        self.prev = Some(w);
    }
}

/// Returns the `n` emitted rows and the sampled words.
pub fn gen_markov(chain: &MarkovChain, n: usize, seed: u64) -> (StateSequence, Vec<usize>) {
    let mut src = MarkovSource::new(chain, seed);
    let k = chain.k;
    let mut data = vec![0.0; k * n];
    for row in data.chunks_exact_mut(k) {
        src.next_row(row);
    }
    (StateSequence::new(data, k).expect("n >= 1"), src.words)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_chain_is_constant() {
        let chain = MarkovChain::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 0.0]).unwrap();
        let (seq, words) = gen_markov(&chain, 50, 1);
        assert!(words.iter().all(|&w| w == 0));
        assert!(seq.rows().all(|r| r == [1.0, 0.0]));
    }

    #[test]
    fn uniform_chain_rows() {
        let chain = MarkovChain::new(vec![vec![0.5, 0.5]; 2], vec![0.5, 0.5]).unwrap();
        let (seq, _) = gen_markov(&chain, 100, 2);
        assert!(seq.rows().all(|r| r == [0.5, 0.5]));
    }

    #[test]
    fn rows_are_transition_rows_of_previous_word() {
        let chain = MarkovChain::random(4, 3);
        let (seq, words) = gen_markov(&chain, 30, 4);
        assert_eq!(seq.row(0), chain.initial());
        for t in 1..30 {
            assert_eq!(seq.row(t), chain.row(words[t - 1]));
        }
    }

    #[test]
    fn bigram_frequencies_match_transitions() {
        let chain = MarkovChain::new(
            vec![
                vec![0.1, 0.6, 0.3],
                vec![0.5, 0.25, 0.25],
                vec![0.2, 0.2, 0.6],
            ],
            vec![1.0 / 3.0; 3],
        )
        .unwrap();
        let n = 10_000;
        let (_, words) = gen_markov(&chain, n, 11);
        let mut counts = [[0u64; 3]; 3];
        for w in words.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        for (i, row) in counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            for (j, &c) in row.iter().enumerate() {
                let p = chain.row(i)[j];
                let sd = (total as f64 * p * (1.0 - p)).sqrt();
                let dev = (c as f64 - total as f64 * p).abs();
                assert!(
                    dev <= 3.0 * sd + 1.0,
                    "({i},{j}): {c} vs {}",
                    total as f64 * p
                );
            }
        }
    }

    #[test]
    fn rejects_invalid_chains() {
        assert!(MarkovChain::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]], vec![0.5, 0.5]).is_err());
        assert!(MarkovChain::new(vec![vec![1.0]], vec![0.5, 0.5]).is_err());
        assert!(MarkovChain::new(vec![vec![1.0, 0.0]], vec![1.0]).is_err());
    }
}
