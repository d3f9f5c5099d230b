//! File formats: the binary PSEQ sequence format, a JSON-lines alternative,
//! and the curve and estimate outputs.
//!
//! A PSEQ file is a 32-byte little-endian header followed by the row-major
//! payload:
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `PSEQ`                   |
//! | 4      | 4    | version, `u32` = 1             |
//! | 8      | 8    | `n_steps`, `u64`               |
//! | 16     | 4    | `dim`, `u32`                   |
//! | 20     | 1    | dtype: 0 = `f32`, 1 = `f64`    |
//! | 21     | 11   | reserved, zero                 |

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corrdim::{CorrelationCurve, EstimateReport};
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::prob::{validate, StateSequence, F32_SUM_TOL, F64_SUM_TOL};

pub const MAGIC: [u8; 4] = *b"PSEQ";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F64),
            _ => None,
        }
    }

    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    /// Row-sum tolerance for data stored at this precision.
    pub fn tolerance(self) -> f64 {
        match self {
            Dtype::F32 => F32_SUM_TOL,
            Dtype::F64 => F64_SUM_TOL,
        }
    }
}

impl std::str::FromStr for Dtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Dtype::F32),
            "f64" => Ok(Dtype::F64),
            other => Err(Error::InvalidParameter(format!(
                "unknown dtype {other:?} (f32|f64)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PseqHeader {
    pub n_steps: u64,
    pub dim: u32,
    pub dtype: Dtype,
}

impl PseqHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..8].copy_from_slice(&VERSION.to_le_bytes());
        b[8..16].copy_from_slice(&self.n_steps.to_le_bytes());
        b[16..20].copy_from_slice(&self.dim.to_le_bytes());
        b[20] = self.dtype.code();
        b
    }

    pub fn parse(b: &[u8; HEADER_LEN], path: &Path) -> Result<Self> {
        if b[0..4] != MAGIC {
            return Err(Error::format(path, "bad magic, expected PSEQ"));
        }
        let version = u32::from_le_bytes(b[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::format(
                path,
                format!("unsupported version {version}"),
            ));
        }
        let n_steps = u64::from_le_bytes(b[8..16].try_into().expect("8 bytes"));
        let dim = u32::from_le_bytes(b[16..20].try_into().expect("4 bytes"));
        let dtype = Dtype::from_code(b[20])
            .ok_or_else(|| Error::format(path, format!("unknown dtype code {}", b[20])))?;
        if b[21..].iter().any(|&x| x != 0) {
            return Err(Error::format(path, "reserved header bytes are not zero"));
        }
        if n_steps == 0 || dim == 0 {
            return Err(Error::format(path, "empty sequence"));
        }
        Ok(PseqHeader {
            n_steps,
            dim,
            dtype,
        })
    }

    /// Payload size in bytes, `None` on overflow.
    pub fn payload_len(&self) -> Option<u64> {
        self.n_steps
            .checked_mul(self.dim as u64)?
            .checked_mul(self.dtype.width() as u64)
    }
}

pub fn write_pseq(seq: &StateSequence, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    let dim = u32::try_from(seq.dim())
        .map_err(|_| Error::InvalidParameter(format!("dimension {} exceeds u32", seq.dim())))?;
    let header = PseqHeader {
        n_steps: seq.n_steps() as u64,
        dim,
        dtype,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    write(&header.to_bytes())?;
    match dtype {
        Dtype::F64 => {
            for v in seq.as_flat() {
                write(&v.to_le_bytes())?;
            }
        }
        Dtype::F32 => {
            for v in seq.as_flat() {
                write(&(*v as f32).to_le_bytes())?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A sequence as read from disk, before row validation.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSequence {
    pub sequence: StateSequence,
    /// `None` for JSON-lines input.
    pub dtype: Option<Dtype>,
}

impl LoadedSequence {
    /// Row-sum tolerance matching the stored precision.
    pub fn tolerance(&self) -> f64 {
        self.dtype.map_or(F64_SUM_TOL, Dtype::tolerance)
    }
}

/// Reads a PSEQ file without checking the rows.
///
/// The header is checked against the file length before anything is
/// allocated, so a corrupt header cannot trigger a huge allocation.
pub fn read_pseq_raw(path: impl AsRef<Path>) -> Result<LoadedSequence> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let file_len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut r = BufReader::new(file);
    let mut hb = [0u8; HEADER_LEN];
    r.read_exact(&mut hb)
        .map_err(|_| Error::format(path, "file shorter than the 32-byte header"))?;
    let header = PseqHeader::parse(&hb, path)?;
    let payload = header
        .payload_len()
        .ok_or_else(|| Error::format(path, "header sizes overflow"))?;
    if file_len != HEADER_LEN as u64 + payload {
        return Err(Error::format(
            path,
            format!(
                "payload is {} bytes, header declares {} x {} x {} = {payload}",
                file_len.saturating_sub(HEADER_LEN as u64),
                header.n_steps,
                header.dim,
                header.dtype.width()
            ),
        ));
    }
    let count = usize::try_from(header.n_steps * header.dim as u64)
        .map_err(|_| Error::format(path, "sequence too large for this platform"))?;
    let mut data = Vec::with_capacity(count);
    let mut buf = vec![0u8; 1 << 16];
    let width = header.dtype.width();
    let mut remaining = payload as usize;
    while remaining > 0 {
        let take = remaining.min(buf.len());
        r.read_exact(&mut buf[..take])
            .map_err(|e| Error::io(path, e))?;
        match header.dtype {
            Dtype::F64 => data.extend(
                buf[..take]
                    .chunks_exact(width)
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))),
            ),
            Dtype::F32 => data.extend(
                buf[..take]
                    .chunks_exact(width)
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64),
            ),
        }
        remaining -= take;
    }
    Ok(LoadedSequence {
        sequence: StateSequence::new(data, header.dim as usize)?,
        dtype: Some(header.dtype),
    })
}

/// Reads one JSON array of numbers per non-blank line.
pub fn read_jsonl_raw(path: impl AsRef<Path>) -> Result<LoadedSequence> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    let mut dim = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::format(
                    path,
                    format!("line {} has {} entries, expected {d}", i + 1, row.len()),
                ))
            }
            _ => {}
        }
        data.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::format(path, "no rows"))?;
    let sequence = StateSequence::new(data, dim).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(LoadedSequence {
        sequence,
        dtype: None,
    })
}

/// PSEQ or JSON lines, decided by the first four bytes.
pub fn read_sequence_raw(path: impl AsRef<Path>) -> Result<LoadedSequence> {
    let path = path.as_ref();
    let mut head = [0u8; 4];
    let n = File::open(path)
        .and_then(|mut f| f.read(&mut head))
        .map_err(|e| Error::io(path, e))?;
    if n == 4 && head == MAGIC {
        read_pseq_raw(path)
    } else {
        read_jsonl_raw(path)
    }
}

fn checked(loaded: LoadedSequence, tolerance: Option<f64>) -> Result<StateSequence> {
    let tol = tolerance.unwrap_or_else(|| loaded.tolerance());
    let violations = validate(&loaded.sequence, tol);
    if violations.is_empty() {
        Ok(loaded.sequence)
    } else {
        Err(Error::Validation(violations))
    }
}

/// Reads and validates a PSEQ file. `tolerance` defaults to the precision
/// of the stored dtype.
pub fn read_pseq(path: impl AsRef<Path>, tolerance: Option<f64>) -> Result<StateSequence> {
    checked(read_pseq_raw(path)?, tolerance)
}

/// Reads and validates either format.
pub fn read_sequence(path: impl AsRef<Path>, tolerance: Option<f64>) -> Result<StateSequence> {
    checked(read_sequence_raw(path)?, tolerance)
}

/// The single-object JSON summary of an analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub nu_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub n_points: usize,
    pub n_pairs: u64,
    pub metric: Metric,
    pub eta: Option<f64>,
    pub m_groups: Option<usize>,
    pub seed: Option<u64>,
}

impl EstimateRecord {
    pub fn from_report(
        report: &EstimateReport,
        metric: Metric,
        eta: Option<f64>,
        m_groups: Option<usize>,
        seed: Option<u64>,
    ) -> Self {
        let e = &report.estimate;
        EstimateRecord {
            nu_hat: e.nu_hat,
            intercept: e.intercept,
            r_squared: e.r_squared,
            fit_lo: e.fit_lo,
            fit_hi: e.fit_hi,
            n_points: report.n_points,
            n_pairs: report.histogram.n_pairs_total,
            metric,
            eta,
            m_groups,
            seed,
        }
    }
}

pub fn write_estimate_json(record: &EstimateRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(record)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_curve_tsv(curve: &CorrelationCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, curve.to_tsv()).map_err(|e| Error::io(path, e))
}

/// Parses `epsilon<TAB>C` lines.
pub fn read_curve_tsv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = || Error::format(path, format!("line {}: expected epsilon<TAB>C", i + 1));
            let (a, b) = l.split_once('\t').ok_or_else(bad)?;
            Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::gen_uniform_sphere_noise;
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn one_row_f64_is_48_bytes() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.pseq");
        let seq = StateSequence::from_rows(&[[0.5, 0.5]]).unwrap();
        write_pseq(&seq, &path, Dtype::F64).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 32 + 16);
        assert_eq!(&bytes[..4], b"PSEQ");
        assert_eq!(bytes[20], 1);
        assert_eq!(read_pseq(&path, None).unwrap(), seq);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let seq = gen_uniform_sphere_noise(7, 50, 3);
        let p64 = dir.path().join("a.pseq");
        write_pseq(&seq, &p64, Dtype::F64).unwrap();
        let back = read_pseq(&p64, None).unwrap();
        assert!(back
            .as_flat()
            .iter()
            .zip(seq.as_flat())
            .all(|(a, b)| a.to_bits() == b.to_bits()));

        let p32 = dir.path().join("b.pseq");
        write_pseq(&seq, &p32, Dtype::F32).unwrap();
        let back = read_pseq(&p32, None).unwrap();
        for (a, b) in back.as_flat().iter().zip(seq.as_flat()) {
            assert_eq!(*a as f32, *b as f32);
        }
        // and a second f32 pass reproduces the same bytes
        let p32b = dir.path().join("c.pseq");
        write_pseq(&back, &p32b, Dtype::F32).unwrap();
        assert_eq!(std::fs::read(&p32).unwrap(), std::fs::read(&p32b).unwrap());
    }

    #[test]
    fn corrupt_headers_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.pseq");
        let seq = StateSequence::from_rows(&[[0.25, 0.75], [1.0, 0.0]]).unwrap();
        write_pseq(&seq, &path, Dtype::F64).unwrap();
        let good = std::fs::read(&path).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_pseq(&path, None), Err(Error::Format { .. })));

        // a header claiming 2^40 rows must fail before allocating
        let mut huge = good.clone();
        huge[8..16].copy_from_slice(&(1u64 << 40).to_le_bytes());
        std::fs::write(&path, &huge).unwrap();
        assert!(matches!(read_pseq(&path, None), Err(Error::Format { .. })));

        let mut ver = good.clone();
        ver[4] = 2;
        std::fs::write(&path, &ver).unwrap();
        assert!(matches!(read_pseq(&path, None), Err(Error::Format { .. })));

        std::fs::write(&path, &good[..40]).unwrap();
        assert!(matches!(read_pseq(&path, None), Err(Error::Format { .. })));

        std::fs::write(&path, &good[..10]).unwrap();
        assert!(matches!(read_pseq(&path, None), Err(Error::Format { .. })));
    }

    #[test]
    fn invalid_rows_listed() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.pseq");
        let seq = StateSequence::new(vec![0.5, 0.5, 0.9, 0.9, -0.1, 1.1], 2).unwrap();
        write_pseq(&seq, &path, Dtype::F64).unwrap();
        match read_pseq(&path, None) {
            Err(Error::Validation(v)) => {
                let rows: Vec<usize> = v.iter().map(|x| x.row).collect();
                assert_eq!(rows, vec![1, 2]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn jsonl_reader() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        std::fs::write(&path, "[0.5, 0.5]\n\n[1, 0]\n").unwrap();
        let seq = read_sequence(&path, None).unwrap();
        assert_eq!(
            seq,
            StateSequence::from_rows(&[[0.5, 0.5], [1.0, 0.0]]).unwrap()
        );
        std::fs::write(&path, "[0.5, 0.5]\n[1]\n").unwrap();
        assert!(matches!(
            read_sequence(&path, None),
            Err(Error::Format { .. })
        ));
        std::fs::write(&path, "").unwrap();
        assert!(read_sequence(&path, None).is_err());
    }

    #[test]
    fn curve_tsv_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        let curve = CorrelationCurve::new(vec![0.1, 0.2], vec![1.0 / 3.0, 1.0], 3).unwrap();
        write_curve_tsv(&curve, &path).unwrap();
        assert_eq!(
            read_curve_tsv(&path).unwrap(),
            vec![(0.1, 1.0 / 3.0), (0.2, 1.0)]
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn pseq_round_trip(rows in 1usize..20, dim in 1usize..9, seed in any::<u64>()) {
            let dir = tempdir().unwrap();
            let path = dir.path().join("p.pseq");
            let seq = if dim >= 2 {
                gen_uniform_sphere_noise(dim, rows, seed)
            } else {
                StateSequence::new(vec![1.0; rows], 1).unwrap()
            };
            write_pseq(&seq, &path, Dtype::F64).unwrap();
            prop_assert_eq!(read_pseq(&path, None).unwrap(), seq);
        }
    }
}
