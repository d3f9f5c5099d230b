use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::fisher_rao;
use crate::processes::Rng;

const STOCHASTIC_TOL: f64 = 1e-9;
const EXIT_TOL: f64 = 1e-12;

/// Two Markov processes over the same vocabulary whose last index is an
/// absorbing end token, entered with the same probability `rho` from every
/// other word.
///
/// Matrices are `K×K`, row `i` holding the probabilities of the word that
/// follows word `i`. The initial vectors are the first-word distributions
/// `p_t` and `p_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingMarkovPair {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    init_a: Vec<f64>,
    init_b: Vec<f64>,
    rho: f64,
}

fn check_vector(name: &str, v: &[f64]) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidProbability(format!("{name} has entry {x}")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidProbability(format!("{name} sums to {s}")));
    }
    Ok(())
}

fn check_matrix(name: &str, m: &DMatrix<f64>, rho: f64) -> Result<()> {
    let k = m.nrows();
    let end = k - 1;
    for i in 0..k {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        check_vector(&format!("{name} row {i}"), &row)?;
    }
    if m[(end, end)] != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "{name}: end token is not absorbing"
        )));
    }
    for w in 0..end {
        if (m[(w, end)] - rho).abs() > EXIT_TOL {
            return Err(Error::InvalidParameter(format!(
                "{name}[{w}][end] = {} differs from rho = {rho}",
                m[(w, end)]
            )));
        }
    }
    Ok(())
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let k = rows.len();
    if k < 2 {
        return Err(Error::InvalidParameter(
            "need at least one word plus the end token".into(),
        ));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: r.len(),
        });
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

impl AbsorbingMarkovPair {
    pub fn new(
        a: &[Vec<f64>],
        b: &[Vec<f64>],
        init_a: Vec<f64>,
        init_b: Vec<f64>,
        rho: f64,
    ) -> Result<Self> {
        AbsorbingMarkovPair::from_matrices(to_matrix(a)?, to_matrix(b)?, init_a, init_b, rho)
    }

    pub fn from_matrices(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        init_a: Vec<f64>,
        init_b: Vec<f64>,
        rho: f64,
    ) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in (0, 1), got {rho}"
            )));
        }
        let k = a.nrows();
        if a.shape() != (k, k) || b.shape() != (k, k) {
            return Err(Error::InvalidParameter(
                "transition matrices must be square and equal in size".into(),
            ));
        }
        if init_a.len() != k || init_b.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: if init_a.len() != k {
                    init_a.len()
                } else {
                    init_b.len()
                },
            });
        }
        check_matrix("A", &a, rho)?;
        check_matrix("B", &b, rho)?;
        check_vector("initial A", &init_a)?;
        check_vector("initial B", &init_b)?;
        Ok(AbsorbingMarkovPair {
            a,
            b,
            init_a,
            init_b,
            rho,
        })
    }

    /// Two i.i.d. processes: every non-end row of each matrix equals its
    /// initial vector. Both vectors must put mass `rho` on the end token.
    pub fn iid(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let k = u.len();
        if k < 2 || v.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: v.len(),
            });
        }
        let rho = u[k - 1];
        let rows = |p: &[f64]| {
            DMatrix::from_fn(k, k, |i, j| match (i == k - 1, j == k - 1) {
                (true, true) => 1.0,
                (true, false) => 0.0,
                _ => p[j],
            })
        };
        let (a, b) = (rows(&u), rows(&v));
        AbsorbingMarkovPair::from_matrices(a, b, u, v, rho)
    }

    /// Vocabulary size including the end token.
    pub fn k(&self) -> usize {
        self.a.nrows()
    }

    pub fn end(&self) -> usize {
        self.k() - 1
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn init_a(&self) -> &[f64] {
        &self.init_a
    }

    pub fn init_b(&self) -> &[f64] {
        &self.init_b
    }

    /// Fisher-Rao distance between the transition rows of word `w`.
    pub fn row_distance(&self, w: usize) -> f64 {
        let ra: Vec<f64> = self.a.row(w).iter().copied().collect();
        let rb: Vec<f64> = self.b.row(w).iter().copied().collect();
        fisher_rao(&ra, &rb).expect("rows share a length")
    }

    /// Largest `Δ_w` over the non-end words.
    pub fn max_row_distance(&self) -> f64 {
        (0..self.end())
            .map(|w| self.row_distance(w))
            .fold(0.0, f64::max)
    }

    /// Fisher-Rao distance between the first-word distributions.
    pub fn d_p(&self) -> f64 {
        fisher_rao(&self.init_a, &self.init_b).expect("initials share a length")
    }

    /// A random valid pair: non-end rows put `rho` on the end token and
    /// spread the rest by a flat Dirichlet draw; the initials are flat
    /// Dirichlet draws over all `k` tokens. With `same_matrix`, `B = A`.
    pub fn random(k: usize, rho: f64, same_matrix: bool, rng: &mut Rng) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(
                "need at least one word plus the end token".into(),
            ));
        }
        let a = random_transition(k, rho, rng);
        let b = if same_matrix {
            a.clone()
        } else {
            random_transition(k, rho, rng)
        };
        let init_a = flat_dirichlet(k, rng);
        let init_b = flat_dirichlet(k, rng);
        AbsorbingMarkovPair::from_matrices(a, b, init_a, init_b, rho)
    }
}

pub(crate) fn flat_dirichlet(k: usize, rng: &mut Rng) -> Vec<f64> {
    // Gamma(1) draws, i.e. exponentials; resample the (measure-zero) all-zero case
    loop {
        let v: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

pub(crate) fn random_transition(k: usize, rho: f64, rng: &mut Rng) -> DMatrix<f64> {
    let end = k - 1;
    let mut m = DMatrix::zeros(k, k);
    for i in 0..end {
        let w = flat_dirichlet(end, rng);
        for j in 0..end {
            m[(i, j)] = (1.0 - rho) * w[j];
        }
        m[(i, end)] = rho;
    }
    m[(end, end)] = 1.0;
    m
}

/// `cos(d_x / 2)`: the Bhattacharyya coefficient between the two
/// closed-text distributions, summed over all text lengths in closed form.
///
/// With `G[i][j] = √(A_ij B_ij)` over non-end words, `u_w = √(p_a(w) p_b(w))`
/// and `e_w = √(A_w,end B_w,end)`, the sum over texts of every length is
/// `√(p_a(end) p_b(end)) + uᵀ (I − G)⁻¹ e`.
pub fn cos_half_dfr_x(pair: &AbsorbingMarkovPair) -> Result<f64> {
    let end = pair.end();
    let n = end;
    let h1 = (pair.init_a[end] * pair.init_b[end]).sqrt();
    if n == 0 {
        return Ok(h1.min(1.0));
    }
    let g = DMatrix::from_fn(n, n, |i, j| (pair.a[(i, j)] * pair.b[(i, j)]).sqrt());
    let e = DVector::from_fn(n, |w, _| (pair.a[(w, end)] * pair.b[(w, end)]).sqrt());
    let u = DVector::from_fn(n, |w, _| (pair.init_a[w] * pair.init_b[w]).sqrt());
    let system = DMatrix::identity(n, n) - g;
    let y = system.lu().solve(&e).ok_or_else(|| {
        Error::Singular("I - G is singular; the end token is not reachable".into())
    })?;
    Ok((h1 + u.dot(&y)).clamp(0.0, 1.0))
}

/// Fisher-Rao distance between the two closed-text distributions.
pub fn d_fr_x(pair: &AbsorbingMarkovPair) -> Result<f64> {
    Ok(2.0 * cos_half_dfr_x(pair)?.acos())
}

/// Brute-force sum over closed texts of at most `max_len` tokens (the end
/// token included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub partial_sum: f64,
    /// Upper bound on the contribution of all longer texts.
    pub tail_bound: f64,
    pub max_len: usize,
    pub n_texts: u128,
}

/// Default cap on the number of prefixes the oracle will walk.
pub const ENUMERATION_BUDGET: u128 = 50_000_000;

/// Enumerates every closed text up to `max_len` tokens and sums
/// `√(x_a(text) x_b(text))`.
///
/// A text of `n ≥ 2` tokens has probability at most
/// `(1 − p(end))(1 − ρ)^(n−2) ρ` under each process, so by Cauchy-Schwarz
/// the texts longer than `max_len` contribute at most
/// `√((1 − p_a(end))(1 − p_b(end))) (1 − ρ)^(max_len − 1)`.
pub fn enumerate_closed_texts(
    pair: &AbsorbingMarkovPair,
    max_len: usize,
    budget: u128,
) -> Result<Enumeration> {
    if max_len == 0 {
        return Err(Error::InvalidParameter("max_len must be >= 1".into()));
    }
    let end = pair.end();
    let words = end as u128;
    // unclosed prefixes of length 0..max_len-1
    let mut prefixes: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..max_len {
        prefixes = prefixes.saturating_add(level);
        level = level.saturating_mul(words);
    }
    if prefixes > budget {
        return Err(Error::BudgetExceeded { prefixes, budget });
    }

    let mut sum = (pair.init_a[end] * pair.init_b[end]).sqrt();
    let mut n_texts: u128 = 1;
    // stack of (last word, prefix length, probability under A, under B)
    let mut stack: Vec<(usize, usize, f64, f64)> = (0..end)
        .map(|w| (w, 1, pair.init_a[w], pair.init_b[w]))
        .collect();
    while let Some((w, len, pa, pb)) = stack.pop() {
        if len + 1 > max_len {
            continue;
        }
        sum += (pa * pair.a[(w, end)] * pb * pair.b[(w, end)]).sqrt();
        n_texts += 1;
        if len + 2 <= max_len {
            for v in 0..end {
                let (qa, qb) = (pa * pair.a[(w, v)], pb * pair.b[(w, v)]);
                stack.push((v, len + 1, qa, qb));
            }
        }
    }

    let mass = ((1.0 - pair.init_a[end]) * (1.0 - pair.init_b[end]))
        .max(0.0)
        .sqrt();
    let tail_bound = mass * (1.0 - pair.rho).powi(max_len as i32 - 1);
    Ok(Enumeration {
        partial_sum: sum,
        tail_bound,
        max_len,
        n_texts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistortionMethod {
    Resolvent,
    Enumeration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub d_x: f64,
    pub d_p: f64,
    pub ratio: f64,
    /// `ρ^(-1/2)`, the limiting upper bound as `d_p → 0`.
    pub bound: f64,
    pub method: DistortionMethod,
    pub truncation_length: Option<usize>,
    pub tail_bound: Option<f64>,
    /// Largest row distance `Δ_w`.
    pub max_delta_w: f64,
    /// Whether `Δ_w ≤ d_p` holds for every non-end word.
    pub norm_condition: bool,
}

fn report(
    pair: &AbsorbingMarkovPair,
    d_x: f64,
    method: DistortionMethod,
) -> Result<DistortionReport> {
    let d_p = pair.d_p();
    if d_p == 0.0 {
        return Err(Error::InvalidParameter(
            "initial distributions coincide; the distortion rate is undefined".into(),
        ));
    }
    let max_delta_w = pair.max_row_distance();
    Ok(DistortionReport {
        d_x,
        d_p,
        ratio: d_x / d_p,
        bound: pair.rho.powf(-0.5),
        method,
        truncation_length: None,
        tail_bound: None,
        max_delta_w,
        norm_condition: max_delta_w <= d_p,
    })
}

/// `d_FR(x_t, x_s) / d_FR(p_t, p_s)` through the resolvent.
pub fn distortion_rate(pair: &AbsorbingMarkovPair) -> Result<DistortionReport> {
    report(pair, d_fr_x(pair)?, DistortionMethod::Resolvent)
}

/// Same ratio from the truncated enumeration; `d_x` is then an upper bound
/// since the partial sum underestimates the coefficient.
pub fn distortion_rate_enumerated(
    pair: &AbsorbingMarkovPair,
    max_len: usize,
    budget: u128,
) -> Result<DistortionReport> {
    let en = enumerate_closed_texts(pair, max_len, budget)?;
    let d_x = 2.0 * en.partial_sum.clamp(0.0, 1.0).acos();
    let mut r = report(pair, d_x, DistortionMethod::Enumeration)?;
    r.truncation_length = Some(max_len);
    r.tail_bound = Some(en.tail_bound);
    Ok(r)
}
