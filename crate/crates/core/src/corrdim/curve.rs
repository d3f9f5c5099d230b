use serde::{Deserialize, Serialize};

use super::histogram::DistanceHistogram;
use crate::error::{Error, Result};

/// Samples `(ε, C(ε))` of the correlation integral, where `C(ε)` is the
/// fraction of unordered distinct pairs closer than `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub epsilons: Vec<f64>,
    pub c_values: Vec<f64>,
    /// Pair count the fractions are relative to.
    pub n_pairs: u64,
}

impl CorrelationCurve {
    pub fn new(epsilons: Vec<f64>, c_values: Vec<f64>, n_pairs: u64) -> Result<Self> {
        if epsilons.len() != c_values.len() {
            return Err(Error::DimensionMismatch {
                expected: epsilons.len(),
                actual: c_values.len(),
            });
        }
        if !epsilons.windows(2).all(|w| w[0] < w[1]) || epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidParameter(
                "curve epsilons must be positive and strictly increasing".into(),
            ));
        }
        if !c_values.windows(2).all(|w| w[0] <= w[1])
            || c_values.iter().any(|c| !(*c > 0.0 && *c <= 1.0))
        {
            return Err(Error::InvalidParameter(
                "curve values must be nondecreasing and lie in (0, 1]".into(),
            ));
        }
        Ok(CorrelationCurve {
            epsilons,
            c_values,
            n_pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    /// `epsilon<TAB>C` per line, shortest round-trip float formatting.
    pub fn to_tsv(&self) -> String {
        let mut s = String::with_capacity(self.len() * 48);
        for (e, c) in self.epsilons.iter().zip(&self.c_values) {
            s.push_str(&format!("{e}\t{c}\n"));
        }
        s
    }
}

/// `C(edges[i+1]) = (underflow + Σ_{j<=i} counts[j]) / n_pairs`, with zero
/// values dropped.
pub fn correlation_curve(hist: &DistanceHistogram) -> CorrelationCurve {
    let total = hist.n_pairs_total as f64;
    let mut running = hist.underflow;
    let mut epsilons = Vec::with_capacity(hist.counts.len());
    let mut c_values = Vec::with_capacity(hist.counts.len());
    for (count, &edge) in hist.counts.iter().zip(&hist.grid.edges()[1..]) {
        running += count;
        if running > 0 {
            epsilons.push(edge);
            c_values.push(running as f64 / total);
        }
    }
    CorrelationCurve {
        epsilons,
        c_values,
        n_pairs: hist.n_pairs_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrdim::EpsilonGrid;

    fn hist(counts: Vec<u64>, under: u64, over: u64) -> DistanceHistogram {
        let n_edges = counts.len() + 1;
        let total = counts.iter().sum::<u64>() + under + over;
        DistanceHistogram {
            grid: EpsilonGrid::log_spaced(0.1, 1.0, n_edges).unwrap(),
            counts,
            underflow: under,
            overflow: over,
            n_points: 0,
            n_pairs_total: total,
        }
    }

    #[test]
    fn cumulative_fractions() {
        let c = correlation_curve(&hist(vec![2, 0, 1], 0, 0));
        assert_eq!(c.c_values, vec![2.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(c.epsilons.len(), 3);
    }

    #[test]
    fn all_underflow_is_flat_one() {
        let c = correlation_curve(&hist(vec![0, 0, 0], 6, 0));
        assert_eq!(c.c_values, vec![1.0; 3]);
    }

    #[test]
    fn leading_zeros_dropped() {
        let c = correlation_curve(&hist(vec![0, 0, 3, 1], 0, 2));
        assert_eq!(c.c_values, vec![0.5, 4.0 / 6.0]);
        assert_eq!(c.epsilons.len(), 2);
    }

    #[test]
    fn tsv_round_trips_floats() {
        let c = CorrelationCurve::new(vec![0.1, 0.2], vec![1.0 / 3.0, 1.0], 3).unwrap();
        let tsv = c.to_tsv();
        let parsed: Vec<(f64, f64)> = tsv
            .lines()
            .map(|l| {
                let (a, b) = l.split_once('\t').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert_eq!(parsed, vec![(0.1, 1.0 / 3.0), (0.2, 1.0)]);
    }
}
