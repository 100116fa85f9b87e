use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::rules::gauss_kronrod_21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// A narrow structure of the integrand (for instance a resonance of width
/// `width` at `location`) that the initial panel layout must resolve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub location: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Panel budget; exceeding it returns the best estimate unconverged.
    pub max_panels: usize,
    pub features: Vec<Feature>,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_panels: 4000,
            features: Vec::new(),
        }
    }
}

impl AdaptiveOptions {
    pub fn absolute(tol: f64) -> Self {
        Self {
            abs_tol: tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }

    pub fn relative(tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: tol,
            ..Self::default()
        }
    }

    pub fn with_features(mut self, features: impl IntoIterator<Item = Feature>) -> Self {
        self.features.extend(features);
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Insertion order, used to break error ties deterministically.
    seq: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Breakpoints that put panel edges at geometrically growing distances
/// from each feature, so a peak narrower than the interval is never
/// stepped over.
fn seed_breakpoints(a: f64, b: f64, features: &[Feature]) -> Vec<f64> {
    let mut points = vec![a, b];
    for feature in features {
        if !(feature.location.is_finite() && feature.width.is_finite() && feature.width > 0.0) {
            continue;
        }
        let span = (b - a).abs();
        let mut offset = feature.width;
        let mut ladder = vec![feature.location];
        while offset < span {
            ladder.push(feature.location - offset);
            ladder.push(feature.location + offset);
            offset *= 4.0;
        }
        points.extend(ladder.into_iter().filter(|&p| p > a && p < b));
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|p, q| (*p - *q).abs() <= 1e-15 * p.abs().max(q.abs()).max(f64::MIN_POSITIVE));
    points
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// error meets `max(abs_tol, rel_tol |value|)` or the panel budget runs out.
/// Panel evaluation order is fixed, so results are reproducible bit for bit.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &AdaptiveOptions) -> QuadratureResult {
    if a == b {
        return QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let points = seed_breakpoints(lo, hi, &opts.features);
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    let mut seq = 0;
    let mut finite = true;
    let push = |heap: &mut BinaryHeap<Panel>, a: f64, b: f64, seq: &mut usize| {
        let est = gauss_kronrod_21(&f, a, b);
        heap.push(Panel {
            a,
            b,
            value: est.value,
            error: est.error,
            seq: *seq,
        });
        *seq += 1;
        est.finite
    };
    for w in points.windows(2) {
        finite &= push(&mut heap, w[0], w[1], &mut seq);
        evaluations += 21;
    }

    let totals = |heap: &BinaryHeap<Panel>| {
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        panels
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };

    let (mut value, mut error) = totals(&heap);
    let max_panels = opts.max_panels.max(heap.len());
    let mut converged = error <= opts.target(value);
    while !converged && finite && heap.len() < max_panels {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            heap.push(worst);
            break;
        }
        finite &= push(&mut heap, worst.a, mid, &mut seq);
        finite &= push(&mut heap, mid, worst.b, &mut seq);
        evaluations += 42;
        (value, error) = totals(&heap);
        converged = error <= opts.target(value);
    }
    QuadratureResult {
        value: sign * value,
        error_estimate: error,
        evaluations,
        converged: converged && finite,
    }
}

/// [`integrate`] with an absolute tolerance and no feature hints.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> QuadratureResult {
    integrate(f, a, b, &AdaptiveOptions::absolute(tol))
}
