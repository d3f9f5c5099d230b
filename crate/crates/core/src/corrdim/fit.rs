use serde::{Deserialize, Serialize};

use super::curve::CorrelationCurve;
use crate::error::{Error, Result};

/// Minimum points for any fit.
pub const MIN_FIT_POINTS: usize = 5;
/// Minimum window length for the automatic rule.
pub const AUTO_MIN_WINDOW: usize = 8;
/// R² a window must reach to qualify under the automatic rule.
pub const AUTO_MIN_R2: f64 = 0.98;
/// Lower bound on `C`, in pairs: below it counts are shot noise.
pub const AUTO_MIN_PAIRS: f64 = 10.0;
/// Upper bound on `C`: above it the integral saturates.
pub const AUTO_MAX_C: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn ols(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        r_squared,
    }
}

/// How the fit region was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitRule {
    /// Caller-supplied `[lo, hi]`.
    Manual,
    /// Widest qualifying window under the automatic rule.
    Window,
    /// No window qualified; every point inside the `C` bounds was used.
    Fallback,
}

/// Slope of `ln C` against `ln ε`, with `intercept` in natural-log units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub nu_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub n_curve_points_used: usize,
    pub rule: FitRule,
}

fn fit_range(
    curve: &CorrelationCurve,
    lx: &[f64],
    ly: &[f64],
    a: usize,
    b: usize,
    rule: FitRule,
) -> DimensionEstimate {
    let f = ols(&lx[a..b], &ly[a..b]);
    DimensionEstimate {
        nu_hat: f.slope.max(0.0),
        intercept: f.intercept,
        r_squared: f.r_squared,
        fit_lo: curve.epsilons[a],
        fit_hi: curve.epsilons[b - 1],
        n_curve_points_used: b - a,
        rule,
    }
}

/// Fits the correlation dimension.
///
/// With `region = Some((lo, hi))` every curve point with `lo <= ε <= hi` is
/// used. Otherwise the points with `C` in `[10 / n_pairs, 0.5]` are
/// considered and the widest contiguous window of at least 8 of them whose
/// R² is at least 0.98 is fitted, ties going to the higher R². When no
/// window qualifies the whole bounded range is fitted and flagged as
/// [`FitRule::Fallback`].
pub fn fit_dimension(
    curve: &CorrelationCurve,
    region: Option<(f64, f64)>,
) -> Result<DimensionEstimate> {
    let lx: Vec<f64> = curve.epsilons.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = curve.c_values.iter().map(|c| c.ln()).collect();

    if let Some((lo, hi)) = region {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "empty fit region [{lo}, {hi}]"
            )));
        }
        let a = curve.epsilons.partition_point(|&e| e < lo);
        let b = curve.epsilons.partition_point(|&e| e <= hi);
        let count = b.saturating_sub(a);
        if count < MIN_FIT_POINTS {
            return Err(Error::FitRegionTooSmall {
                needed: MIN_FIT_POINTS,
                actual: count,
            });
        }
        return Ok(fit_range(curve, &lx, &ly, a, b, FitRule::Manual));
    }

    let c_lo = AUTO_MIN_PAIRS / curve.n_pairs.max(1) as f64;
    let a = curve.c_values.partition_point(|&c| c < c_lo);
    let b = curve.c_values.partition_point(|&c| c <= AUTO_MAX_C);
    let count = b.saturating_sub(a);
    if count < MIN_FIT_POINTS {
        return Err(Error::FitRegionTooSmall {
            needed: MIN_FIT_POINTS,
            actual: count,
        });
    }

    let mut best: Option<(usize, f64, usize)> = None; // (len, r2, start)
    for len in (AUTO_MIN_WINDOW..=count).rev() {
        for s in a..=b - len {
            let f = ols(&lx[s..s + len], &ly[s..s + len]);
            if f.r_squared >= AUTO_MIN_R2 && best.is_none_or(|(_, r2, _)| f.r_squared > r2) {
                best = Some((len, f.r_squared, s));
            }
        }
        if best.is_some() {
            break;
        }
    }
    Ok(match best {
        Some((len, _, s)) => fit_range(curve, &lx, &ly, s, s + len, FitRule::Window),
        None => fit_range(curve, &lx, &ly, a, b, FitRule::Fallback),
    })
}
