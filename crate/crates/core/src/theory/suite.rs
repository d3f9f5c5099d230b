use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::absorbing::{
    cos_half_dfr_x, distortion_rate, enumerate_closed_texts, AbsorbingMarkovPair,
    ENUMERATION_BUDGET,
};
use super::gamma::{gamma_merge_experiment, GammaConfig};
use super::phi::{phi_linearity_check, TextDistribution};
use super::probe::{perturbation_probe, ProbeConfig};
use crate::error::Result;
use crate::processes::rng_from_seed;

/// Outcome of one numerical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: measured={:.6e} bound={:.6e} tol={:.1e} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.bound,
            self.tolerance,
            self.detail
        )
    }
}

fn random_rho(rng: &mut crate::processes::Rng) -> f64 {
    rng.random_range(0.05..0.95)
}

/// Same transition matrix, different initial vectors: `|r − 1|` over
/// `n_pairs` random pairs with up to 8 tokens.
pub fn check_same_matrix(n_pairs: usize, seed: u64) -> Result<Check> {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_pairs {
        let k = rng.random_range(2..=8);
        let rho = random_rho(&mut rng);
        let pair = AbsorbingMarkovPair::random(k, rho, true, &mut rng)?;
        worst = worst.max((distortion_rate(&pair)?.ratio - 1.0).abs());
    }
    Ok(Check {
        name: "same-matrix distortion".into(),
        measured: worst,
        bound: 0.0,
        tolerance: 1e-9,
        passed: worst < 1e-9,
        detail: format!("max |r - 1| over {n_pairs} pairs"),
    })
}

/// `r ≥ 1` for arbitrary valid pairs.
pub fn check_lower_bound(n_pairs: usize, seed: u64) -> Result<Check> {
    let mut rng = rng_from_seed(seed);
    let mut lowest = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..n_pairs {
        let k = rng.random_range(2..=8);
        let rho = random_rho(&mut rng);
        let pair = AbsorbingMarkovPair::random(k, rho, false, &mut rng)?;
        let r = distortion_rate(&pair)?.ratio;
        if r < 1.0 - 1e-9 {
            violations += 1;
        }
        lowest = lowest.min(r);
    }
    Ok(Check {
        name: "distortion lower bound".into(),
        measured: lowest,
        bound: 1.0,
        tolerance: 1e-9,
        passed: violations == 0,
        detail: format!("min r over {n_pairs} pairs, {violations} violations"),
    })
}

/// Small-distance limit of `r` for different chains; the worst final ratio
/// over `n_probes` random perturbation families.
pub fn check_limit(rho: f64, iid: bool, n_probes: usize, seed: u64) -> Result<Check> {
    let cfg = ProbeConfig {
        iid,
        ..ProbeConfig::new(rho)
    };
    let mut worst: f64 = 0.0;
    let mut held = true;
    let mut monotone = 0;
    let mut bound = 0.0;
    for i in 0..n_probes {
        let r = perturbation_probe(&cfg, seed.wrapping_add(i as u64))?;
        worst = worst.max(r.final_ratio);
        held &= r.conditions_held;
        monotone += r.monotone as usize;
        bound = r.bound;
    }
    let tolerance = 0.05;
    Ok(Check {
        name: format!("{} limit rho={rho}", if iid { "i.i.d." } else { "two-chain" }),
        measured: worst,
        bound,
        tolerance,
        passed: held && worst <= bound + tolerance,
        detail: format!(
            "worst final r over {n_probes} families, {} halvings, row condition {}, {monotone}/{n_probes} monotone",
            cfg.halvings,
            if held { "held" } else { "VIOLATED" }
        ),
    })
}

/// Resolvent against truncated enumeration: the gap must lie within the
/// tail bound.
pub fn check_oracle(n_pairs: usize, max_len: usize, seed: u64) -> Result<Check> {
    let mut rng = rng_from_seed(seed);
    let mut agree = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..n_pairs {
        let k = rng.random_range(2..=4);
        let rho = random_rho(&mut rng);
        let pair = AbsorbingMarkovPair::random(k, rho, false, &mut rng)?;
        let exact = cos_half_dfr_x(&pair)?;
        let en = enumerate_closed_texts(&pair, max_len, ENUMERATION_BUDGET)?;
        let gap = exact - en.partial_sum;
        let excess = gap.abs() - en.tail_bound;
        worst_excess = worst_excess.max(excess);
        if gap >= -1e-12 && excess <= 1e-12 {
            agree += 1;
        }
    }
    Ok(Check {
        name: "resolvent vs enumeration".into(),
        measured: agree as f64,
        bound: n_pairs as f64,
        tolerance: 0.0,
        passed: agree == n_pairs,
        detail: format!(
            "{agree}/{n_pairs} within tail bound at L={max_len}, worst excess {worst_excess:.2e}"
        ),
    })
}

pub fn check_phi_linearity(n_pairs: usize, seed: u64) -> Result<Check> {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    let mut endpoints_exact = true;
    for _ in 0..n_pairs {
        let k = rng.random_range(2..=5);
        let rho = random_rho(&mut rng);
        let pair = AbsorbingMarkovPair::random(k, rho, false, &mut rng)?;
        let x1 = TextDistribution::from_chain(&pair, false, 6);
        let x2 = TextDistribution::from_chain(&pair, true, 6);
        endpoints_exact &= phi_linearity_check(&x1, &x2, 0.0)? == 0.0;
        endpoints_exact &= phi_linearity_check(&x1, &x2, 1.0)? == 0.0;
        let alpha = rng.random::<f64>();
        worst = worst.max(phi_linearity_check(&x1, &x2, alpha)?);
    }
    Ok(Check {
        name: "phi linearity".into(),
        measured: worst,
        bound: 0.0,
        tolerance: 1e-12,
        passed: endpoints_exact && worst < 1e-12,
        detail: format!(
            "max deviation over {n_pairs} mixtures, endpoints {}",
            if endpoints_exact {
                "exact"
            } else {
                "NOT exact"
            }
        ),
    })
}

pub fn check_gamma(gamma_in: f64, seed: u64) -> Result<Check> {
    let e = gamma_merge_experiment(&GammaConfig::new(gamma_in), seed)?;
    let dev = (e.gamma_after - gamma_in).abs();
    Ok(Check {
        name: format!("gamma invariance gamma_in={gamma_in}"),
        measured: e.gamma_after,
        bound: gamma_in,
        tolerance: 0.05,
        passed: dev <= 0.05,
        detail: format!(
            "gamma_before={:.4}, mean shift {:.1e}, {} contexts x {} levels",
            e.gamma_before,
            e.max_mean_shift(),
            e.n_contexts,
            e.levels.len()
        ),
    })
}

/// Every check with its default size, seeds derived from `seed`.
pub fn run_suite(seed: u64) -> Result<Vec<Check>> {
    let s = |i: u64| seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i);
    Ok(vec![
        check_same_matrix(100, s(1))?,
        check_lower_bound(1000, s(2))?,
        check_limit(0.25, false, 10, s(3))?,
        check_limit(0.5, false, 10, s(4))?,
        check_limit(0.25, true, 10, s(5))?,
        check_oracle(100, 10, s(6))?,
        check_phi_linearity(50, s(7))?,
        check_gamma(0.8, s(8))?,
        check_gamma(1.0, s(9))?,
        check_gamma(1.5, s(10))?,
    ])
}
