use serde::{Deserialize, Serialize};

use super::curve::{correlation_curve, CorrelationCurve};
use super::fit::{fit_dimension, DimensionEstimate};
use super::grid::{EpsilonGrid, DEFAULT_EDGES};
use super::histogram::{pairwise_histogram, DistanceHistogram};
use crate::error::{Error, Result};
use crate::metrics::{Embedding, Metric};
use crate::prob::{apply_filter, FilterSpec, StateSequence};
use crate::reduce::{project_sequence, ReductionSpec};

/// Pipeline settings: filter, then reduce, then embed, bin, and fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// `None` keeps every row.
    pub filter: Option<FilterSpec>,
    /// Modulo group count; `None` or a value `>= K` skips the reduction.
    pub m_groups: Option<usize>,
    pub metric: Metric,
    pub n_edges: usize,
    pub region: Option<(f64, f64)>,
    /// Fewest rows the filter may leave.
    pub min_points: usize,
    /// Also fit the first half of the retained rows.
    pub convergence: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            filter: Some(FilterSpec::default()),
            m_groups: Some(1000),
            metric: Metric::FisherRao,
            n_edges: DEFAULT_EDGES,
            region: None,
            min_points: 100,
            convergence: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: DimensionEstimate,
    pub curve: CorrelationCurve,
    pub histogram: DistanceHistogram,
    pub n_input: usize,
    pub n_points: usize,
    /// Dimension the distances were computed in.
    pub dim: usize,
    /// Slope from the first half of the retained rows, when requested.
    pub nu_hat_half: Option<f64>,
}

pub fn estimate(seq: &StateSequence, opts: &EstimateOptions) -> Result<EstimateReport> {
    let n_input = seq.n_steps();
    let filtered;
    let seq = match &opts.filter {
        Some(spec) => {
            let r = apply_filter(seq, spec)?;
            if r.retained.len() < opts.min_points.max(2) {
                return Err(Error::FilterTooStrict {
                    retained: r.retained.len(),
                    total: r.total,
                    needed: opts.min_points.max(2),
                });
            }
            filtered = r.sequence.expect("non-empty filter result");
            &filtered
        }
        None => {
            if n_input < opts.min_points.max(2) {
                return Err(Error::TooFewPoints {
                    needed: opts.min_points.max(2),
                    actual: n_input,
                });
            }
            seq
        }
    };
    let reduced;
    let seq = match opts.m_groups {
        Some(m) if m < seq.dim() => {
            reduced = project_sequence(seq, &ReductionSpec::new(m, seq.dim())?)?;
            &reduced
        }
        _ => seq,
    };
    let emb = Embedding::new(seq, opts.metric);
    let mut report = estimate_embedded(&emb, opts)?;
    report.n_input = n_input;
    Ok(report)
}

/// Runs the binning and fit on rows already filtered, reduced and embedded.
pub fn estimate_embedded(emb: &Embedding, opts: &EstimateOptions) -> Result<EstimateReport> {
    let grid = EpsilonGrid::auto(emb, opts.n_edges)?;
    let histogram = pairwise_histogram(emb, &grid)?;
    let curve = correlation_curve(&histogram);
    let estimate = fit_dimension(&curve, opts.region)?;
    let n = emb.n_rows();
    let nu_hat_half = if opts.convergence && n >= 4 {
        let half: Vec<usize> = (0..n / 2).collect();
        let sub = emb.select(&half);
        let h = pairwise_histogram(&sub, &grid)?;
        fit_dimension(&correlation_curve(&h), opts.region)
            .ok()
            .map(|e| e.nu_hat)
    } else {
        None
    };
    Ok(EstimateReport {
        estimate,
        curve,
        histogram,
        n_input: n,
        n_points: n,
        dim: emb.dim(),
        nu_hat_half,
    })
}
