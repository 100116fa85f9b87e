//! Cutoff scans of (possibly divergent) frequency integrals and the
//! classification of their growth law.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::adaptive::{integrate, AdaptiveOptions};
use crate::error::{Error, Result};

/// `n` geometrically spaced points from `min` to `max` inclusive.
pub fn geometric_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && min.is_finite() && max.is_finite()) {
        return Err(Error::invalid("lambda range", format!("need 0 < min < max, got [{min}, {max}]")));
    }
    if n < 2 {
        return Err(Error::invalid("points", "need at least 2 grid points"));
    }
    let ratio = (max / min).ln() / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|k| min * (ratio * k as f64).exp()).collect();
    grid[n - 1] = max;
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub lambda: f64,
    pub cumulative: f64,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffScan {
    pub lower: f64,
    pub points: Vec<ScanPoint>,
    /// All segment integrals met their tolerance.
    pub converged: bool,
    pub evaluations: usize,
}

impl CutoffScan {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.cumulative).collect()
    }
}

/// Cumulative integrals of `f` from `lower` up to each cutoff in `lambdas`.
///
/// Each segment `[lambda_{k-1}, lambda_k]` is integrated once and added to
/// the running total, so lower cutoffs are never recomputed. Tolerances in
/// `opts` apply per segment.
pub fn cutoff_scan<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    lambdas: &[f64],
    opts: &AdaptiveOptions,
) -> Result<CutoffScan> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambdas", "empty cutoff list"));
    }
    if lambdas[0] <= lower || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "lambdas",
            "cutoffs must be strictly increasing and above the lower limit",
        ));
    }
    let mut points = Vec::with_capacity(lambdas.len());
    let mut total = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    let mut evaluations = 0;
    let mut left = lower;
    for &lambda in lambdas {
        let seg = integrate(&f, left, lambda, opts);
        if !seg.value.is_finite() {
            return Err(Error::NonFinite {
                location: format!("segment [{left}, {lambda}]"),
            });
        }
        total += seg.value;
        error += seg.error_estimate;
        converged &= seg.converged;
        evaluations += seg.evaluations;
        points.push(ScanPoint {
            lambda,
            cumulative: total,
            error_estimate: error,
        });
        left = lambda;
    }
    Ok(CutoffScan {
        lower,
        points,
        converged,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    Convergent,
    Logarithmic,
    Power,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailClassification {
    pub kind: TailKind,
    /// Fitted growth exponent of the cumulative integral, `I ~ Lambda^p`
    /// (`p = 0` for logarithmic growth, negative for a convergent power tail).
    pub exponent: Option<f64>,
    /// RMS residual of the log-log increment fit.
    pub fit_residual: Option<f64>,
    /// Coefficient of determination of the linear-in-`ln Lambda` fit.
    pub log_r_squared: f64,
    pub points_used: usize,
}

impl TailClassification {
    /// Exponent of the integrand, `f ~ x^(p - 1)`.
    pub fn integrand_exponent(&self) -> Option<f64> {
        self.exponent.map(|p| p - 1.0)
    }

    /// Growth rank for comparisons: convergent < logarithmic < power(p).
    pub fn growth_rank(&self) -> Option<f64> {
        match self.kind {
            TailKind::Convergent => Some(f64::NEG_INFINITY),
            TailKind::Logarithmic => Some(0.0),
            TailKind::Power => self.exponent,
            TailKind::Ambiguous => None,
        }
    }

    pub fn describe(&self) -> String {
        match (self.kind, self.exponent) {
            (TailKind::Power, Some(p)) => format!("power({p:.2})"),
            (TailKind::Convergent, _) => "convergent".into(),
            (TailKind::Logarithmic, _) => "logarithmic".into(),
            _ => "ambiguous".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailOptions {
    /// Number of trailing scan points treated as asymptotic; `None` takes
    /// the upper half of the scan (plus one point).
    pub window: Option<usize>,
    /// Largest RMS residual (in `ln` units) accepted for a power-law fit.
    pub max_fit_residual: f64,
    /// Fitted exponents with `|p| <= log_band` are candidates for
    /// logarithmic growth.
    pub log_band: f64,
    pub min_log_r_squared: f64,
    /// Relative size of the last increment below which the scan is
    /// considered Cauchy-convergent.
    pub cauchy_tol: f64,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            window: None,
            max_fit_residual: 0.05,
            log_band: 0.1,
            min_log_r_squared: 0.999,
            cauchy_tol: 1e-6,
        }
    }
}

/// Least-squares power-law fit `ln y = c + p ln x + d (x0 / x)`.
///
/// The `x0 / x` column absorbs the leading finite-size correction of an
/// asymptotic power law, with `x0` the smallest abscissa. Returns
/// `(p, rms residual)`.
pub fn power_law_fit(xs: &[f64], ys: &[f64], with_correction: bool) -> Option<(f64, f64)> {
    let cols = if with_correction { 3 } else { 2 };
    if xs.len() != ys.len() || xs.len() <= cols || ys.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
        return None;
    }
    let x0 = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let m = DMatrix::from_fn(xs.len(), cols, |i, j| match j {
        0 => 1.0,
        1 => xs[i].ln(),
        _ => x0 / xs[i],
    });
    let rhs = DVector::from_iterator(ys.len(), ys.iter().map(|y| y.ln()));
    let coef = m.clone().svd(true, true).solve(&rhs, 1e-14).ok()?;
    let resid = &rhs - &m * &coef;
    let rms = (resid.norm_squared() / ys.len() as f64).sqrt();
    Some((coef[1], rms))
}

fn log_r_squared(lambdas: &[f64], values: &[f64]) -> f64 {
    let n = lambdas.len() as f64;
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = values.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = values.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 || sxx == 0.0 {
        return 0.0;
    }
    sxy * sxy / (sxx * syy)
}

/// Classifies the growth of a cutoff scan over its asymptotic window.
///
/// Three tests run on the trailing window: a Cauchy test on the relative
/// size of the last increments, a log-log fit of the increments
/// `I(Lambda_k) - I(Lambda_{k-1})` against the geometric midpoints (with a
/// leading `1/Lambda` correction), and a linear fit of `I` against
/// `ln Lambda`. A class is reported only when its thresholds pass;
/// otherwise the outcome is [`TailKind::Ambiguous`].
pub fn classify_tail(scan: &CutoffScan, opts: &TailOptions) -> Result<TailClassification> {
    let n = scan.points.len();
    let window = opts.window.unwrap_or(n / 2 + 1).min(n);
    if window < 5 {
        return Err(Error::InsufficientScan { needed: 5, got: window });
    }
    let tail = &scan.points[n - window..];
    let lambdas: Vec<f64> = tail.iter().map(|p| p.lambda).collect();
    let values: Vec<f64> = tail.iter().map(|p| p.cumulative).collect();
    let increments: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let mids: Vec<f64> = lambdas.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let r2 = log_r_squared(&lambdas, &values);
    let fit = power_law_fit(&mids, &increments, true);

    let last = *values.last().expect("window is non-empty");
    let scale = last.abs().max(f64::MIN_POSITIVE);
    let non_increasing = increments.windows(2).all(|w| w[1].abs() <= w[0].abs());
    let cauchy = non_increasing && increments.last().is_some_and(|d| d.abs() <= opts.cauchy_tol * scale);

    let (kind, exponent, residual) = match fit {
        Some((p, rms)) if rms <= opts.max_fit_residual => {
            let kind = if p > opts.log_band {
                TailKind::Power
            } else if p < -opts.log_band {
                TailKind::Convergent
            } else if r2 >= opts.min_log_r_squared {
                TailKind::Logarithmic
            } else if cauchy {
                TailKind::Convergent
            } else {
                TailKind::Ambiguous
            };
            (kind, Some(p), Some(rms))
        }
        other => {
            let kind = if cauchy { TailKind::Convergent } else { TailKind::Ambiguous };
            (kind, None, other.map(|(_, rms)| rms))
        }
    };
    Ok(TailClassification {
        kind,
        exponent,
        fit_residual: residual,
        log_r_squared: r2,
        points_used: window,
    })
}
