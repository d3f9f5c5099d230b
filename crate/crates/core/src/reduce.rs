//! Modulo grouping of vocabulary indices: coordinate `w` of a length-`K`
//! distribution is added into group `w mod M` (0-based indices).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{ProbVector, StateSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionSpec {
    pub m_groups: usize,
    pub source_dim: usize,
}

impl ReductionSpec {
    pub fn new(m_groups: usize, source_dim: usize) -> Result<Self> {
        if m_groups == 0 || m_groups > source_dim {
            return Err(Error::InvalidParameter(format!(
                "group count {m_groups} must lie in [1, {source_dim}]"
            )));
        }
        Ok(ReductionSpec {
            m_groups,
            source_dim,
        })
    }

    /// `M` capped at the source dimension, so that `M >= K` means "no-op".
    pub fn capped(m_groups: usize, source_dim: usize) -> Result<Self> {
        ReductionSpec::new(m_groups.min(source_dim), source_dim)
    }

    pub fn is_identity(&self) -> bool {
        self.m_groups == self.source_dim
    }

    /// Writes the grouped row into `out` (length `M`).
    pub fn project_into(&self, p: &[f64], out: &mut [f64]) -> Result<()> {
        if p.len() != self.source_dim {
            return Err(Error::DimensionMismatch {
                expected: self.source_dim,
                actual: p.len(),
            });
        }
        debug_assert_eq!(out.len(), self.m_groups);
        out.fill(0.0);
        for chunk in p.chunks(self.m_groups) {
            for (o, v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        Ok(())
    }
}

pub fn modulo_project(p: &ProbVector, spec: &ReductionSpec) -> Result<ProbVector> {
    let mut out = vec![0.0; spec.m_groups];
    spec.project_into(p.as_slice(), &mut out)?;
    // grouping only adds entries, so the sum survives up to rounding
    ProbVector::new(out, 1e-6)
}

pub fn project_sequence(seq: &StateSequence, spec: &ReductionSpec) -> Result<StateSequence> {
    if seq.dim() != spec.source_dim {
        return Err(Error::DimensionMismatch {
            expected: spec.source_dim,
            actual: seq.dim(),
        });
    }
    if spec.is_identity() {
        return Ok(seq.clone());
    }
    let m = spec.m_groups;
    let mut data = vec![0.0; seq.n_steps() * m];
    for (row, out) in seq.rows().zip(data.chunks_exact_mut(m)) {
        spec.project_into(row, out)?;
    }
    StateSequence::new(data, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::fisher_rao;
    use crate::prob::F64_SUM_TOL;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec(), F64_SUM_TOL).unwrap()
    }

    #[test]
    fn examples() {
        let p = pv(&[0.1, 0.2, 0.3, 0.4]);
        let q = modulo_project(&p, &ReductionSpec::new(2, 4).unwrap()).unwrap();
        assert!((q.as_slice()[0] - 0.4).abs() < 1e-15);
        assert!((q.as_slice()[1] - 0.6).abs() < 1e-15);

        let q = modulo_project(&p, &ReductionSpec::new(4, 4).unwrap()).unwrap();
        assert_eq!(q, p);

        let q = modulo_project(&p, &ReductionSpec::new(1, 4).unwrap()).unwrap();
        assert!((q.as_slice()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sequence_grouping_by_hand() {
        let rows = [
            [0.1, 0.2, 0.3, 0.05, 0.15, 0.2],
            [0.0, 0.0, 0.5, 0.0, 0.0, 0.5],
            [1.0 / 6.0; 6],
        ];
        let seq = StateSequence::from_rows(&rows).unwrap();
        let out = project_sequence(&seq, &ReductionSpec::new(3, 6).unwrap()).unwrap();
        let want = [[0.15, 0.35, 0.5], [0.0, 0.0, 1.0], [1.0 / 3.0; 3]];
        for (got, want) in out.rows().zip(want) {
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-15);
            }
        }
        assert_eq!(
            project_sequence(&seq, &ReductionSpec::new(6, 6).unwrap()).unwrap(),
            seq
        );
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ReductionSpec::new(0, 4).is_err());
        assert!(ReductionSpec::new(5, 4).is_err());
        assert_eq!(ReductionSpec::capped(5, 4).unwrap().m_groups, 4);
        let p = pv(&[0.5, 0.5]);
        assert!(modulo_project(&p, &ReductionSpec::new(2, 4).unwrap()).is_err());
    }

    fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, k).prop_filter_map("zero row", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-9).then(|| v.into_iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn mass_linearity_contraction(
            (k, m, p, q) in (2usize..30).prop_flat_map(|k| (Just(k), 1..=k, simplex(k), simplex(k))),
            alpha in 0.0f64..=1.0,
        ) {
            let spec = ReductionSpec::new(m, k).unwrap();
            let mut rp = vec![0.0; m];
            let mut rq = vec![0.0; m];
            spec.project_into(&p, &mut rp).unwrap();
            spec.project_into(&q, &mut rq).unwrap();
            prop_assert!((rp.iter().sum::<f64>() - p.iter().sum::<f64>()).abs() < 1e-12);

            let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
            let mut rmix = vec![0.0; m];
            spec.project_into(&mix, &mut rmix).unwrap();
            for i in 0..m {
                prop_assert!((rmix[i] - (alpha * rp[i] + (1.0 - alpha) * rq[i])).abs() < 1e-12);
            }

            prop_assert!(fisher_rao(&rp, &rq).unwrap() <= fisher_rao(&p, &q).unwrap() + 1e-9);
        }
    }
}
