//! Frequency-axis integration: adaptive Gauss-Kronrod quadrature with
//! feature seeding, cumulative cutoff scans and growth-law classification.

mod adaptive;
pub mod rules;
mod tail;

pub use adaptive::{integrate, integrate_adaptive, AdaptiveOptions, Feature, QuadratureResult};
pub use rules::{gauss_hermite, gauss_legendre};
pub use tail::{
    classify_tail, cutoff_scan, geometric_grid, power_law_fit, CutoffScan, ScanPoint,
    TailClassification, TailKind, TailOptions,
};
