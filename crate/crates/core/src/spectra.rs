//! Momentum-averaged spectra and direction-resolved emission probabilities.
//!
//! The spectral density along `n` is `w(x) = x^2 <rho(x, n, beta)>`, the
//! long-time kernel averaged over the momentum distribution and weighted by
//! the mode density. Integrated over `x` (times the normalization `kappa`) it
//! gives the emission probability per steradian, which grows without bound
//! for every coupling model. How fast it grows is what separates the
//! Roentgen coupling from the standard one.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitudes::{detuning, spectral_kernel};
use crate::coupling::CouplingModel;
use crate::error::{Error, Result};
use crate::geometry::{direction_from_angles, UnitVector3};
use crate::quadrature::{
    classify_tail, cutoff_scan, gauss_legendre, integrate, AdaptiveOptions, CutoffScan, Feature,
    QuadratureResult, TailClassification, TailKind, TailOptions,
};
use crate::rates::{golden_rule_rate, resonance_frequency, RateVariant};
use crate::units::{DimensionlessParams, Normalization};
use crate::wavepacket::{expectation, project, MomentumDistribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomScenario {
    pub params: DimensionlessParams,
    pub e_d: UnitVector3,
    pub model: CouplingModel,
    pub distribution: MomentumDistribution,
}

impl AtomScenario {
    pub fn at_rest(params: DimensionlessParams, model: CouplingModel) -> Self {
        Self {
            params,
            e_d: UnitVector3::z_axis(),
            model,
            distribution: MomentumDistribution::at_rest(),
        }
    }

    pub fn with_model(&self, model: CouplingModel) -> Self {
        Self { model, ..self.clone() }
    }

    pub fn normalization(&self) -> Normalization {
        Normalization::normalized(&self.params)
    }

}

/// Damping of the squared coupling at high frequency. The profile
/// multiplies `w(x)` once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Formfactor {
    None,
    Sharp { cutoff: f64 },
    Gaussian { cutoff: f64 },
    Exponential { cutoff: f64 },
}

impl Formfactor {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Formfactor::None => 1.0,
            Formfactor::Sharp { cutoff } => {
                if x <= cutoff {
                    1.0
                } else {
                    0.0
                }
            }
            Formfactor::Gaussian { cutoff } => (-(x * x) / (cutoff * cutoff)).exp(),
            Formfactor::Exponential { cutoff } => (-x / cutoff).exp(),
        }
    }

    pub fn is_regularizing(&self) -> bool {
        !matches!(self, Formfactor::None)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Formfactor::None => Ok(()),
            Formfactor::Sharp { cutoff } | Formfactor::Gaussian { cutoff } | Formfactor::Exponential { cutoff } => {
                if cutoff > 0.0 && cutoff.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid("formfactor.cutoff", format!("must be finite and > 0, got {cutoff}")))
                }
            }
        }
    }
}

/// How the momentum average is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageStrategy {
    /// Adaptive in the Doppler projection, exact in the remaining velocity
    /// components (see [`spectral_density`]).
    Auto,
    /// Tensor Gauss-Hermite quadrature over the 3D distribution.
    Tensor,
}

/// Per-axis order of tensor Gauss-Hermite rules.
pub const TENSOR_HERMITE_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub strategy: AverageStrategy,
    /// Per-axis order for tensor averages (the tensor strategy and
    /// golden-rule patterns over Gaussian wavepackets).
    pub hermite_order: usize,
    /// Tolerances for frequency integrals and for the adaptive average over
    /// a Gaussian Doppler projection.
    pub quadrature: AdaptiveOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            strategy: AverageStrategy::Auto,
            hermite_order: TENSOR_HERMITE_ORDER,
            quadrature: AdaptiveOptions::relative(1e-10),
        }
    }
}

/// `w(x)` with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    pub value: f64,
    pub error: f64,
}

fn gaussian_pdf(delta: f64, mean: f64, sigma: f64) -> f64 {
    let z = (delta - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Two-point Hermite nodes `(offset, weight)` for a zero-mean Gaussian with
/// covariance `c`, one pair per non-degenerate principal axis. Exact for
/// polynomials of degree three.
fn hermite_pairs(c: &Matrix3<f64>) -> Vec<(Vector3<f64>, f64)> {
    let eig = SymmetricEigen::new(*c);
    let floor = 1e-14 * c.trace().abs();
    let mut nodes = vec![(Vector3::zeros(), 1.0)];
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= floor {
            continue;
        }
        let step = lambda.sqrt() * eig.eigenvectors.column(k);
        nodes = nodes
            .iter()
            .flat_map(|(v, w)| [(v - step, 0.5 * w), (v + step, 0.5 * w)])
            .collect();
    }
    nodes
}

fn kernel_sum(scenario: &AtomScenario, n: &UnitVector3, x: f64, nodes: &[(Vector3<f64>, f64)], base: &Vector3<f64>) -> Result<f64> {
    let mut sum = 0.0;
    for (offset, w) in nodes {
        let beta = base + offset;
        sum += w * spectral_kernel(scenario.model, x, n, &beta, &scenario.params, &scenario.e_d)?.value;
    }
    Ok(x * x * sum)
}

/// Gaussian wavepacket average. With `delta = n . beta` of variance
/// `s^2 = n C n`, the remaining velocity given `delta` is Gaussian with mean
/// `mu + C n (delta - n mu) / s^2` and covariance `C - C n n^T C / s^2`. The
/// line shape depends on `beta` only through `delta`, and the coupling sum
/// is quadratic in `beta`, so the conditional average is exact with
/// two-point rules and only the `delta` integral needs adaptivity.
fn gaussian_density(
    scenario: &AtomScenario,
    n: &UnitVector3,
    x: f64,
    mean: &Vector3<f64>,
    covariance: &Matrix3<f64>,
    opts: &SpectrumOptions,
) -> Result<Density> {
    let cn = covariance * n.as_vector();
    let s2 = n.dot(&cn);
    let delta_mean = n.dot(mean);
    if s2 <= 1e-14 * covariance.trace().abs() {
        return Ok(Density {
            value: kernel_sum(scenario, n, x, &hermite_pairs(covariance), mean)?,
            error: 0.0,
        });
    }
    let conditional = covariance - cn * cn.transpose() / s2;
    let nodes = hermite_pairs(&conditional);
    let sigma = s2.sqrt();
    let params = &scenario.params;
    let mut features = vec![Feature {
        location: delta_mean,
        width: sigma,
    }];
    if x > 0.0 {
        // Doppler projection at which this frequency is resonant; the
        // detuning changes with delta at rate x.
        features.push(Feature {
            location: 1.0 - (1.0 - params.epsilon * x * x) / x,
            width: 0.5 * params.gamma_tilde / x,
        });
    }
    let quad = AdaptiveOptions {
        features,
        ..opts.quadrature.clone()
    };
    let r = integrate(
        |delta| {
            let base = mean + cn * ((delta - delta_mean) / s2);
            gaussian_pdf(delta, delta_mean, sigma) * kernel_sum(scenario, n, x, &nodes, &base).unwrap_or(f64::NAN)
        },
        delta_mean - 12.0 * sigma,
        delta_mean + 12.0 * sigma,
        &quad,
    );
    if !r.value.is_finite() {
        return Err(Error::NonFinite {
            location: format!("Doppler average at x = {x}"),
        });
    }
    Ok(Density {
        value: r.value,
        error: r.error_estimate,
    })
}

/// Momentum-averaged spectral density along `n` at frequency `x`.
pub fn spectral_density(scenario: &AtomScenario, n: &UnitVector3, x: f64, opts: &SpectrumOptions) -> Result<Density> {
    let dist = &scenario.distribution;
    if opts.strategy == AverageStrategy::Tensor {
        let e = expectation(
            dist,
            |beta: &Vector3<f64>| {
                spectral_kernel(scenario.model, x, n, beta, &scenario.params, &scenario.e_d)
                    .map(|k| x * x * k.value)
                    .unwrap_or(f64::NAN)
            },
            opts.hermite_order,
        )?;
        return Ok(Density {
            value: e.value,
            error: e.error_estimate,
        });
    }
    match dist {
        MomentumDistribution::Gaussian { mean, covariance } => gaussian_density(scenario, n, x, mean, covariance, opts),
        MomentumDistribution::PointMass { .. } | MomentumDistribution::Tabulated { .. } => {
            // A table only fixes velocities along its own axis.
            project(dist, n)?;
            Ok(Density {
                value: kernel_sum(scenario, n, x, &dist.nodes(1), &Vector3::zeros())?,
                error: 0.0,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub direction: [f64; 3],
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub error: Vec<f64>,
    pub normalization: Normalization,
    pub warnings: Vec<String>,
}

impl SpectralResult {
    /// Grid point with the largest `w`.
    pub fn peak(&self) -> (f64, f64) {
        self.x
            .iter()
            .zip(&self.w)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(x, w)| (*x, *w))
            .expect("spectrum grid is non-empty")
    }
}

/// Resonance location and its width in `x` (natural or Doppler, whichever
/// is larger) for the distribution's mean Doppler projection.
pub fn resonance_feature(scenario: &AtomScenario, n: &UnitVector3) -> Result<Feature> {
    let (delta, sigma) = match project(&scenario.distribution, n) {
        Ok(p) => p.mean_and_width(),
        Err(_) => (0.0, 0.0),
    };
    let eps = scenario.params.epsilon;
    let x_star = resonance_frequency(delta, eps)?.x_star;
    let jacobian = 1.0 - delta + 2.0 * eps * x_star;
    let doppler = sigma * x_star / jacobian;
    Ok(Feature {
        location: x_star,
        width: (0.5 * scenario.params.gamma_tilde).max(doppler),
    })
}

pub fn directional_spectrum(
    scenario: &AtomScenario,
    n: &UnitVector3,
    x_grid: &[f64],
    opts: &SpectrumOptions,
) -> Result<SpectralResult> {
    if x_grid.is_empty() || x_grid.windows(2).any(|w| w[1] <= w[0]) || x_grid[0] < 0.0 {
        return Err(Error::invalid("x_grid", "must be non-empty, non-negative and strictly increasing"));
    }
    let mut warnings = Vec::new();
    let feature = resonance_feature(scenario, n)?;
    let reach = 10.0 * feature.width.max(scenario.params.gamma_tilde);
    if x_grid[0] > feature.location - reach || x_grid[x_grid.len() - 1] < feature.location + reach {
        warnings.push(format!(
            "x grid [{}, {}] does not cover the resonance {} +/- {}",
            x_grid[0],
            x_grid[x_grid.len() - 1],
            feature.location,
            reach
        ));
    }
    let values = x_grid
        .par_iter()
        .map(|&x| spectral_density(scenario, n, x, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralResult {
        direction: n.to_array(),
        x: x_grid.to_vec(),
        w: values.iter().map(|d| d.value).collect(),
        error: values.iter().map(|d| d.error).collect(),
        normalization: scenario.normalization(),
        warnings,
    })
}

/// Emission probability per steradian along `n` from frequencies in
/// `[lower, upper]`: `kappa * integral of w(x) F(x) dx`.
pub fn directional_probability(
    scenario: &AtomScenario,
    n: &UnitVector3,
    formfactor: &Formfactor,
    lower: f64,
    upper: f64,
    opts: &SpectrumOptions,
) -> Result<QuadratureResult> {
    formfactor.validate()?;
    if !(lower >= 0.0 && upper > lower && upper.is_finite()) {
        return Err(Error::invalid("upper", format!("need 0 <= lower < upper, got [{lower}, {upper}]")));
    }
    let feature = resonance_feature(scenario, n)?;
    let upper = match formfactor {
        Formfactor::Sharp { cutoff } => upper.min(*cutoff),
        _ => upper,
    };
    if upper <= lower {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let kappa = scenario.normalization().kappa;
    let quad = opts.quadrature.clone().with_features([feature]);
    let r = integrate(
        |x| {
            spectral_density(scenario, n, x, opts)
                .map(|d| d.value * formfactor.value(x))
                .unwrap_or(f64::NAN)
        },
        lower,
        upper,
        &quad,
    );
    if !r.value.is_finite() {
        return Err(Error::NonFinite {
            location: format!("directional integrand on [{lower}, {upper}]"),
        });
    }
    Ok(QuadratureResult {
        value: kappa * r.value,
        error_estimate: kappa * r.error_estimate,
        ..r
    })
}

/// Cumulative directional probability (no formfactor) from zero up to each
/// cutoff.
pub fn probability_scan(
    scenario: &AtomScenario,
    n: &UnitVector3,
    lambdas: &[f64],
    opts: &SpectrumOptions,
) -> Result<CutoffScan> {
    let feature = resonance_feature(scenario, n)?;
    let kappa = scenario.normalization().kappa;
    let quad = opts.quadrature.clone().with_features([feature]);
    cutoff_scan(
        |x| {
            spectral_density(scenario, n, x, opts)
                .map(|d| kappa * d.value)
                .unwrap_or(f64::NAN)
        },
        0.0,
        lambdas,
        &quad,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScan {
    pub label: String,
    pub model: CouplingModel,
    pub scan: CutoffScan,
    pub classification: TailClassification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub text: String,
    pub roentgen_more_divergent: bool,
    /// Dropping the recoil term from the coupling changes the growth class.
    pub recoil_removal_cures: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub epsilon: f64,
    pub gamma_tilde: f64,
    pub direction: [f64; 3],
    pub models: Vec<ModelScan>,
    pub verdict: Option<Verdict>,
}

impl DivergenceReport {
    pub fn model(&self, label: &str) -> Option<&ModelScan> {
        self.models.iter().find(|m| m.label == label)
    }
}

/// Cutoff scans and growth classes for the full Roentgen coupling, the
/// standard dipole coupling (same kinematics), and the Roentgen coupling
/// with the recoil term removed but the momentum shift kept.
pub fn divergence_comparison(
    scenario_base: &AtomScenario,
    n: &UnitVector3,
    lambdas: &[f64],
    opts: &SpectrumOptions,
    tail: &TailOptions,
) -> Result<DivergenceReport> {
    if scenario_base.params.epsilon <= 0.0 {
        return Err(Error::invalid("epsilon", "divergence comparison needs a finite mass (epsilon > 0)"));
    }
    let models = [
        CouplingModel::FULL_ROENTGEN,
        CouplingModel::StandardDipole,
        CouplingModel::Roentgen {
            recoil_term: false,
            momentum_shift: true,
        },
    ];
    let scans = models
        .par_iter()
        .map(|&model| {
            let scan = probability_scan(&scenario_base.with_model(model), n, lambdas, opts)?;
            let classification = classify_tail(&scan, tail)?;
            Ok(ModelScan {
                label: model.label().to_string(),
                model,
                scan,
                classification,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = {
        let ranks: Option<Vec<f64>> = scans.iter().map(|m| m.classification.growth_rank()).collect();
        ranks.map(|r| {
            let (full, standard, no_recoil) = (&scans[0], &scans[1], &scans[2]);
            let more = r[0] > r[1];
            let cures = r[2] <= r[1];
            let text = format!(
                "roentgen: {} vs standard: {}; {}; without recoil term: {} ({})",
                full.classification.describe(),
                standard.classification.describe(),
                if more {
                    "roentgen strictly more divergent"
                } else {
                    "roentgen not more divergent"
                },
                no_recoil.classification.describe(),
                if cures {
                    "removing the recoil term cures the growth"
                } else {
                    "removing the recoil term does not cure the growth"
                },
            );
            Verdict {
                text,
                roentgen_more_divergent: more,
                recoil_removal_cures: cures,
            }
        })
    };
    Ok(DivergenceReport {
        epsilon: scenario_base.params.epsilon,
        gamma_tilde: scenario_base.params.gamma_tilde,
        direction: n.to_array(),
        models: scans,
        verdict,
    })
}

/// How an angular pattern is kept finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatternMode {
    /// Golden-rule rate per steradian (delta function before mode sum).
    GoldenRule { variant: RateVariant },
    /// Directional probability with a formfactor up to `upper`.
    Formfactor { formfactor: Formfactor, upper: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternPoint {
    pub theta: f64,
    pub value: f64,
    pub error: f64,
}

fn check_regularized(scenario: &AtomScenario, mode: &PatternMode) -> Result<()> {
    if let PatternMode::Formfactor { formfactor, .. } = mode {
        if !formfactor.is_regularizing() && scenario.model.is_roentgen() && scenario.params.epsilon > 0.0 {
            return Err(Error::Unregularized(
                "the Roentgen coupling at finite mass makes the emission probability in a given \
                 direction grow as the square of the frequency cutoff; choose a formfactor or the \
                 golden-rule mode"
                    .into(),
            ));
        }
    }
    Ok(())
}

/// Emission per steradian along `n` under the chosen regularization.
pub fn regularized_emission(
    scenario: &AtomScenario,
    n: &UnitVector3,
    mode: &PatternMode,
    opts: &SpectrumOptions,
) -> Result<(f64, f64)> {
    match mode {
        PatternMode::GoldenRule { variant } => {
            let e = expectation(
                &scenario.distribution,
                |beta: &Vector3<f64>| {
                    golden_rule_rate(*variant, beta, n, &scenario.e_d, &scenario.params, scenario.model)
                        .map(|r| r.per_steradian())
                        .unwrap_or(f64::NAN)
                },
                opts.hermite_order,
            )?;
            Ok((e.value, e.error_estimate))
        }
        PatternMode::Formfactor { formfactor, upper } => {
            let r = directional_probability(scenario, n, formfactor, 0.0, *upper, opts)?;
            if !r.converged {
                return Err(Error::Numerical(format!(
                    "directional probability did not converge (error {:e})",
                    r.error_estimate
                )));
            }
            Ok((r.value, r.error_estimate))
        }
    }
}

/// Emission per steradian versus the angle `theta` from the dipole axis, at
/// azimuth `phi`.
pub fn angular_pattern(
    scenario: &AtomScenario,
    thetas: &[f64],
    phi: f64,
    mode: &PatternMode,
    opts: &SpectrumOptions,
) -> Result<Vec<PatternPoint>> {
    check_regularized(scenario, mode)?;
    thetas
        .par_iter()
        .map(|&theta| {
            let n = direction_from_angles(scenario.e_d, theta, phi)?;
            let (value, error) = regularized_emission(scenario, &n, mode, opts)?;
            Ok(PatternPoint { theta, value, error })
        })
        .collect()
}

/// Integral of the regularized emission over the sphere: Gauss-Legendre in
/// `cos theta` and the trapezoidal rule in `phi`.
pub fn sphere_integral(
    scenario: &AtomScenario,
    mode: &PatternMode,
    polar_order: usize,
    azimuth_points: usize,
    opts: &SpectrumOptions,
) -> Result<f64> {
    check_regularized(scenario, mode)?;
    let (u, w) = gauss_legendre(polar_order);
    let m = azimuth_points.max(1);
    let cells: Vec<(f64, f64, f64)> = u
        .iter()
        .zip(&w)
        .flat_map(|(&u, &w)| (0..m).map(move |k| (u, w, 2.0 * PI * k as f64 / m as f64)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(u, _, phi)| {
            let n = direction_from_angles(scenario.e_d, u.clamp(-1.0, 1.0).acos(), phi)?;
            regularized_emission(scenario, &n, mode, opts).map(|(v, _)| v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cells
        .iter()
        .zip(&values)
        .map(|(&(_, w, _), v)| w * v * 2.0 * PI / m as f64)
        .sum())
}

/// Whether a classification shows growth with the cutoff.
pub fn grows(c: &TailClassification) -> bool {
    matches!(c.kind, TailKind::Power | TailKind::Logarithmic)
}

/// Detuning at the mean Doppler projection, exposed for diagnostics.
pub fn mean_detuning(scenario: &AtomScenario, n: &UnitVector3, x: f64) -> Result<f64> {
    let (delta, _) = project(&scenario.distribution, n)?.mean_and_width();
    Ok(detuning(x, delta, scenario.params.epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64, g: f64) -> DimensionlessParams {
        DimensionlessParams::new(eps, g).unwrap()
    }

    #[test]
    fn formfactor_profiles() {
        for f in [
            Formfactor::None,
            Formfactor::Sharp { cutoff: 3.0 },
            Formfactor::Gaussian { cutoff: 3.0 },
            Formfactor::Exponential { cutoff: 3.0 },
        ] {
            assert_eq!(f.value(0.0), 1.0);
            for x in [0.5, 2.9, 3.1, 50.0] {
                let v = f.value(x);
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert_eq!(Formfactor::Sharp { cutoff: 3.0 }.value(2.999), 1.0);
        assert!(Formfactor::Gaussian { cutoff: 0.0 }.validate().is_err());
    }

    #[test]
    fn rest_atom_line_peaks_at_one() {
        let s = AtomScenario::at_rest(params(0.0, 1e-3), CouplingModel::StandardDipole);
        let n = UnitVector3::x_axis();
        let grid: Vec<f64> = (0..=400).map(|k| 0.99 + k as f64 * 5e-5).collect();
        let r = directional_spectrum(&s, &n, &grid, &SpectrumOptions::default()).unwrap();
        assert!(r.warnings.is_empty());
        let (x_peak, _) = r.peak();
        assert!((x_peak - 1.0).abs() <= 5e-5);
        // Half maximum at x = 1 +/- gamma/2, up to the slowly varying x^3.
        let half = |x: f64| spectral_density(&s, &n, x, &SpectrumOptions::default()).unwrap().value;
        let ratio = half(1.0 + 5e-4) / half(1.0);
        assert!((ratio - 0.5).abs() < 2e-3, "{ratio}");
    }

    #[test]
    fn moving_atom_line_is_doppler_shifted() {
        let mut s = AtomScenario::at_rest(params(0.0, 1e-4), CouplingModel::StandardDipole);
        let n = UnitVector3::x_axis();
        s.distribution = MomentumDistribution::point(Vector3::new(0.1, 0.0, 0.0));
        let step = 1e-5;
        let grid: Vec<f64> = (0..=2000).map(|k| 1.1 + k as f64 * step).collect();
        let r = directional_spectrum(&s, &n, &grid, &SpectrumOptions::default()).unwrap();
        assert!((r.peak().0 - 1.0 / 0.9).abs() <= step);
    }

    #[test]
    fn conditional_average_matches_tensor_rule() {
        let covariance = Matrix3::new(4e-6, 1e-6, 0.0, 1e-6, 2e-6, 5e-7, 0.0, 5e-7, 1e-6);
        let s = AtomScenario {
            params: params(1e-3, 5e-2),
            e_d: UnitVector3::z_axis(),
            model: CouplingModel::FULL_ROENTGEN,
            distribution: MomentumDistribution::gaussian(Vector3::new(0.01, -0.02, 0.005), covariance).unwrap(),
        };
        let n = UnitVector3::new(1.0, 0.5, 0.7).unwrap();
        let tensor = SpectrumOptions {
            strategy: AverageStrategy::Tensor,
            ..SpectrumOptions::default()
        };
        for x in [0.5, 0.98, 1.0, 1.03, 4.0] {
            let a = spectral_density(&s, &n, x, &SpectrumOptions::default()).unwrap().value;
            let b = spectral_density(&s, &n, x, &tensor).unwrap().value;
            assert!((a - b).abs() < 1e-9 * b, "x = {x}: {a} vs {b}");
        }
    }

    #[test]
    fn grid_missing_resonance_warns() {
        let s = AtomScenario::at_rest(params(0.0, 1e-3), CouplingModel::StandardDipole);
        let r = directional_spectrum(&s, &UnitVector3::x_axis(), &[2.0, 3.0], &SpectrumOptions::default()).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn unregularized_roentgen_pattern_is_rejected() {
        let s = AtomScenario::at_rest(params(0.01, 1e-3), CouplingModel::FULL_ROENTGEN);
        let mode = PatternMode::Formfactor {
            formfactor: Formfactor::None,
            upper: 50.0,
        };
        let err = angular_pattern(&s, &[0.5], 0.0, &mode, &SpectrumOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Unregularized(_)));
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn formfactor_ordering() {
        let s = AtomScenario::at_rest(params(0.01, 1e-2), CouplingModel::FULL_ROENTGEN);
        let n = UnitVector3::x_axis();
        let opts = SpectrumOptions::default();
        let mut last = 0.0;
        for cutoff in [2.0, 5.0, 20.0, 50.0] {
            let r = directional_probability(&s, &n, &Formfactor::Gaussian { cutoff }, 0.0, 400.0, &opts).unwrap();
            assert!(r.value > last);
            last = r.value;
        }
    }

    #[test]
    fn probability_requires_ordered_limits() {
        let s = AtomScenario::at_rest(params(0.01, 1e-2), CouplingModel::FULL_ROENTGEN);
        let n = UnitVector3::x_axis();
        assert!(directional_probability(&s, &n, &Formfactor::None, 5.0, 1.0, &SpectrumOptions::default()).is_err());
    }

    #[test]
    fn divergence_needs_finite_mass() {
        let s = AtomScenario::at_rest(params(0.0, 1e-2), CouplingModel::FULL_ROENTGEN);
        let err = divergence_comparison(
            &s,
            &UnitVector3::x_axis(),
            &[1e2, 1e3],
            &SpectrumOptions::default(),
            &TailOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput { .. }));
    }
}
