use gpdim::io::{read_curve_tsv, read_pseq, read_sequence, write_curve_tsv, write_pseq, Dtype};
use gpdim::processes::{gen_markov, gen_uniform_sphere_noise, MarkovChain};
use gpdim::reduce::{project_sequence, ReductionSpec};
use gpdim::{estimate, Error, EstimateOptions, FilterSpec, Metric, StateSequence};

/// PSEQ bytes assembled field by field, the way an outside producer would.
fn external_pseq(rows: &[Vec<f32>]) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(b"PSEQ");
    b.extend_from_slice(&1u32.to_le_bytes());
    b.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    b.extend_from_slice(&(rows[0].len() as u32).to_le_bytes());
    b.push(0);
    b.extend_from_slice(&[0u8; 11]);
    assert_eq!(b.len(), 32);
    for r in rows {
        for v in r {
            b.extend_from_slice(&v.to_le_bytes());
        }
    }
    b
}

fn softmax_f32(logits: &[f32]) -> Vec<f32> {
    let m = logits.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    let e: Vec<f32> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f32 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

#[test]
fn reads_float32_rows_from_an_outside_writer() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ext.pseq");
    let rows: Vec<Vec<f32>> = (0..300)
        .map(|t| {
            let logits: Vec<f32> = (0..64)
                .map(|k| ((t * 7 + k * 13) % 31) as f32 * 0.17 - (k as f32 * 0.05))
                .collect();
            softmax_f32(&logits)
        })
        .collect();
    std::fs::write(&path, external_pseq(&rows)).unwrap();

    let seq = read_pseq(&path, None).unwrap();
    assert_eq!((seq.n_steps(), seq.dim()), (300, 64));
    assert_eq!(seq.row(17)[5], rows[17][5] as f64);

    let report = estimate(
        &seq,
        &EstimateOptions {
            filter: Some(FilterSpec::eta(0.5)),
            m_groups: Some(16),
            min_points: 20,
            ..EstimateOptions::default()
        },
    )
    .unwrap();
    assert!(report.estimate.nu_hat.is_finite());
    assert!(report.estimate.r_squared.is_finite());
    assert_eq!(report.dim, 16);
}

#[test]
fn float32_tolerance_does_not_leak_into_float64() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![
        vec![0.5, 0.5 + 2e-6],
        vec![0.25, 0.75],
        vec![0.6, 0.4 - 3e-6],
    ];
    let seq = StateSequence::from_rows(&rows).unwrap();

    let p64 = dir.path().join("a.pseq");
    write_pseq(&seq, &p64, Dtype::F64).unwrap();
    match read_pseq(&p64, None) {
        Err(Error::Validation(v)) => {
            let bad: Vec<usize> = v.iter().map(|x| x.row).collect();
            assert_eq!(bad, vec![0, 2]);
        }
        other => panic!("expected validation failure, got {other:?}"),
    }
    assert!(read_pseq(&p64, Some(1e-4)).is_ok());

    let p32 = dir.path().join("b.pseq");
    write_pseq(&seq, &p32, Dtype::F32).unwrap();
    assert_eq!(read_pseq(&p32, None).unwrap().n_steps(), 3);
}

#[test]
fn file_round_trip_preserves_the_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let (seq, _) = gen_markov(&MarkovChain::random(30, 5), 800, 6);
    let path = dir.path().join("m.pseq");
    write_pseq(&seq, &path, Dtype::F64).unwrap();
    let back = read_sequence(&path, None).unwrap();
    assert_eq!(back, seq);

    let opts = EstimateOptions {
        filter: None,
        ..EstimateOptions::default()
    };
    let a = estimate(&seq, &opts).unwrap();
    let b = estimate(&back, &opts).unwrap();
    assert_eq!(a, b);

    let tsv = dir.path().join("c.tsv");
    write_curve_tsv(&a.curve, &tsv).unwrap();
    let pts = read_curve_tsv(&tsv).unwrap();
    let (e, c): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    assert_eq!(e, a.curve.epsilons);
    assert_eq!(c, a.curve.c_values);
}

#[test]
fn jsonl_and_pseq_agree() {
    let dir = tempfile::tempdir().unwrap();
    let seq = gen_uniform_sphere_noise(12, 40, 3);
    let jl = dir.path().join("u.jsonl");
    let text: String = seq
        .rows()
        .map(|r| serde_json::to_string(r).unwrap() + "\n")
        .collect();
    std::fs::write(&jl, text).unwrap();
    let from_json = read_sequence(&jl, None).unwrap();
    assert_eq!(from_json, seq);
}

#[test]
fn reducing_before_or_inside_the_pipeline_matches() {
    let seq = gen_uniform_sphere_noise(500, 400, 9);
    let spec = ReductionSpec::new(50, 500).unwrap();
    let pre = project_sequence(&seq, &spec).unwrap();
    let base = EstimateOptions {
        filter: None,
        ..EstimateOptions::default()
    };
    let inside = estimate(
        &seq,
        &EstimateOptions {
            m_groups: Some(50),
            ..base.clone()
        },
    )
    .unwrap();
    let outside = estimate(
        &pre,
        &EstimateOptions {
            m_groups: None,
            ..base
        },
    )
    .unwrap();
    assert_eq!(inside.histogram, outside.histogram);
    assert_eq!(inside.estimate, outside.estimate);
}

#[test]
fn euclidean_and_fisher_rao_pick_different_scales() {
    let seq = gen_uniform_sphere_noise(20, 600, 4);
    let run = |metric| {
        estimate(
            &seq,
            &EstimateOptions {
                filter: None,
                metric,
                ..EstimateOptions::default()
            },
        )
        .unwrap()
    };
    let fr = run(Metric::FisherRao);
    let eu = run(Metric::Euclidean);
    assert_eq!(fr.histogram.total(), eu.histogram.total());
    assert!(fr.curve.epsilons.last() > eu.curve.epsilons.last());
    assert!(fr.estimate.nu_hat > 1.0 && eu.estimate.nu_hat > 1.0);
}

#[test]
fn convergence_fit_uses_half_the_rows() {
    let (seq, _) = gen_markov(&MarkovChain::random(25, 8), 1200, 9);
    let r = estimate(
        &seq,
        &EstimateOptions {
            filter: None,
            convergence: true,
            ..EstimateOptions::default()
        },
    )
    .unwrap();
    let half = r.nu_hat_half.expect("half-sample fit");
    assert!((half - r.estimate.nu_hat).abs() / r.estimate.nu_hat < 0.3);
}

#[test]
fn strict_filter_reports_counts() {
    let seq = gen_uniform_sphere_noise(10, 200, 2);
    let err = estimate(
        &seq,
        &EstimateOptions {
            filter: Some(FilterSpec::eta(0.05)),
            ..EstimateOptions::default()
        },
    )
    .unwrap_err();
    match err {
        Error::FilterTooStrict {
            retained,
            total,
            needed,
        } => {
            assert_eq!((retained, total, needed), (0, 200, 100));
        }
        e => panic!("unexpected {e}"),
    }
}
