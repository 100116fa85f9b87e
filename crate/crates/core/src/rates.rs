//! Golden-rule emission rates per solid angle.
//!
//! Energy conservation `x (1 - delta + eps x) = 1` fixes the emitted
//! frequency `x*`. The rate along `n` is proportional to
//! `x*^3 sum_lambda G^2 / (1 - delta + 2 eps x*)`: one power of `x` from the
//! per-photon field strength, two from the mode density, and the Jacobian
//! of the energy delta function. Variant `F` evaluates the coupling at the
//! initial momentum, variant `F'` at the momentum after the recoil.
//!
//! Rates are expressed relative to the resting infinitely heavy atom
//! emitting perpendicular to its dipole (value 1 there). Multiplying by
//! `3 / (8 pi)` gives the rate per steradian in units of `gamma0`, which
//! integrates to one over the sphere in that reference case.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::coupling::{polarization_sum, CouplingModel};
use crate::error::{Error, Result};
use crate::geometry::UnitVector3;
use crate::quadrature::{geometric_grid, AdaptiveOptions, TailClassification, TailOptions};
use crate::spectra::{self, AtomScenario, Formfactor};
use crate::units::DimensionlessParams;
use crate::wavepacket::MomentumDistribution;

/// Converts a relative rate into a rate per steradian in units of `gamma0`.
pub const PER_STERADIAN: f64 = 3.0 / (8.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRoot {
    pub x_star: f64,
    /// `x* (1 - delta + eps x*) - 1`.
    pub residual: f64,
}

/// Positive root of `eps x^2 + (1 - delta) x - 1 = 0`.
pub fn resonance_frequency(delta: f64, epsilon: f64) -> Result<ResonanceRoot> {
    if !(delta.is_finite() && epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::NoResonance { delta, epsilon });
    }
    let b = 1.0 - delta;
    let x_star = if epsilon == 0.0 {
        if b <= 0.0 {
            return Err(Error::NoResonance { delta, epsilon });
        }
        1.0 / b
    } else {
        let disc = (b * b + 4.0 * epsilon).sqrt();
        if b > 0.0 {
            // Avoids the cancellation in (-b + disc) / (2 eps) at small eps.
            2.0 / (b + disc)
        } else {
            (disc - b) / (2.0 * epsilon)
        }
    };
    if !(x_star > 0.0 && x_star.is_finite()) {
        return Err(Error::NoResonance { delta, epsilon });
    }
    Ok(ResonanceRoot {
        x_star,
        residual: x_star * (b + epsilon * x_star) - 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RateVariant {
    /// Coupling at the initial momentum `p`.
    F,
    /// Coupling at the post-emission momentum `p + hbar k`.
    #[serde(rename = "F_prime")]
    FPrime,
}

impl RateVariant {
    pub fn label(&self) -> &'static str {
        match self {
            RateVariant::F => "F",
            RateVariant::FPrime => "F_prime",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub variant: RateVariant,
    /// Rate along `n` relative to the resting reference case.
    pub value: f64,
    pub x_star: f64,
    pub delta: f64,
    pub model: CouplingModel,
}

impl RateResult {
    pub fn per_steradian(&self) -> f64 {
        PER_STERADIAN * self.value
    }
}

/// Golden-rule rate along `n`. For the Roentgen model the variant decides
/// where the coupling is evaluated; the model's own shift flag is ignored.
pub fn golden_rule_rate(
    variant: RateVariant,
    beta: &Vector3<f64>,
    n: &UnitVector3,
    e_d: &UnitVector3,
    params: &DimensionlessParams,
    model: CouplingModel,
) -> Result<RateResult> {
    let delta = n.dot(beta);
    let root = resonance_frequency(delta, params.epsilon)?;
    let x = root.x_star;
    let jacobian = 1.0 - delta + 2.0 * params.epsilon * x;
    if jacobian.abs() < f64::EPSILON {
        return Err(Error::VanishingJacobian { x_star: x });
    }
    let coupling_model = match model {
        CouplingModel::StandardDipole => CouplingModel::StandardDipole,
        CouplingModel::Roentgen { recoil_term, .. } => CouplingModel::Roentgen {
            recoil_term,
            momentum_shift: variant == RateVariant::FPrime,
        },
    };
    let g2 = polarization_sum(coupling_model, beta, x, n, e_d, params.epsilon);
    Ok(RateResult {
        variant,
        value: x.powi(3) * g2 / jacobian.abs(),
        x_star: x,
        delta,
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitOrderingOptions {
    /// Fixed cutoffs at which the mode-sum-first probability is tabulated.
    pub cutoffs: Vec<f64>,
    /// The growth scan runs over `[start / eps, start / eps * 10^decades]`,
    /// well inside the regime `eps x >> 1`.
    pub scan_start: f64,
    pub scan_decades: f64,
    pub scan_points: usize,
    pub quadrature: AdaptiveOptions,
    pub tail: TailOptions,
}

impl Default for LimitOrderingOptions {
    fn default() -> Self {
        Self {
            cutoffs: vec![1e2, 1e3, 1e4],
            scan_start: 10.0,
            scan_decades: 2.0,
            scan_points: 16,
            quadrature: AdaptiveOptions::relative(1e-10),
            tail: TailOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitOrderingRow {
    pub epsilon: f64,
    pub x_star: f64,
    /// Delta function evaluated first: rates per steradian (units of gamma0).
    pub rate_f: f64,
    pub rate_f_prime: f64,
    pub relative_difference: f64,
    /// Mode sum performed first: directional probability up to each cutoff.
    pub cutoffs: Vec<f64>,
    pub mode_sum_first: Vec<f64>,
    pub growth: Option<TailClassification>,
}

/// Compares taking `M -> infinity` before and after the sum over modes,
/// for the full Roentgen coupling and a single atomic velocity.
pub fn limit_ordering_demo(
    epsilons: &[f64],
    beta: &Vector3<f64>,
    n: &UnitVector3,
    e_d: &UnitVector3,
    gamma_tilde: f64,
    opts: &LimitOrderingOptions,
) -> Result<Vec<LimitOrderingRow>> {
    if epsilons.iter().any(|e| e.is_nan() || *e <= 0.0) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("epsilons", "need a strictly decreasing sequence of positive values"));
    }
    let model = CouplingModel::FULL_ROENTGEN;
    epsilons
        .iter()
        .map(|&epsilon| {
            let params = DimensionlessParams::new(epsilon, gamma_tilde)?;
            let f = golden_rule_rate(RateVariant::F, beta, n, e_d, &params, model)?;
            let fp = golden_rule_rate(RateVariant::FPrime, beta, n, e_d, &params, model)?;
            let scenario = AtomScenario {
                params,
                e_d: *e_d,
                model,
                distribution: MomentumDistribution::point(*beta),
            };
            let spectrum_opts = spectra::SpectrumOptions {
                quadrature: opts.quadrature.clone(),
                ..Default::default()
            };
            let mode_sum_first = opts
                .cutoffs
                .iter()
                .map(|&cutoff| {
                    spectra::directional_probability(&scenario, n, &Formfactor::None, 0.0, cutoff, &spectrum_opts)
                        .map(|r| r.value)
                })
                .collect::<Result<Vec<_>>>()?;
            let start = opts.scan_start / epsilon;
            let lambdas = geometric_grid(start, start * 10f64.powf(opts.scan_decades), opts.scan_points)?;
            let scan = spectra::probability_scan(&scenario, n, &lambdas, &spectrum_opts)?;
            let growth = crate::quadrature::classify_tail(&scan, &opts.tail)?;
            Ok(LimitOrderingRow {
                epsilon,
                x_star: fp.x_star,
                rate_f: f.per_steradian(),
                rate_f_prime: fp.per_steradian(),
                relative_difference: (fp.value - f.value).abs() / f.value,
                cutoffs: opts.cutoffs.clone(),
                mode_sum_first,
                growth: Some(growth),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::direction_from_angles;
    use crate::quadrature::gauss_legendre;

    fn perp() -> (UnitVector3, UnitVector3) {
        (UnitVector3::x_axis(), UnitVector3::z_axis())
    }

    #[test]
    fn resonance_roots() {
        assert_eq!(resonance_frequency(0.0, 0.0).unwrap().x_star, 1.0);
        let r = resonance_frequency(0.1, 0.0).unwrap();
        assert!((r.x_star - 1.0 / 0.9).abs() < 1e-15);
        let r = resonance_frequency(0.0, 0.05).unwrap();
        let quadratic = (-1.0 + 1.2f64.sqrt()) / 0.1;
        assert!((r.x_star - quadratic).abs() < 1e-14);
        assert!((r.x_star - 0.954_451_2).abs() < 1e-7);
        assert!(r.residual.abs() < 1e-12);
    }

    #[test]
    fn no_root_for_superluminal_projection_without_recoil() {
        assert!(matches!(resonance_frequency(1.0, 0.0), Err(Error::NoResonance { .. })));
        assert!(resonance_frequency(1.5, 0.01).unwrap().x_star > 0.0);
    }

    #[test]
    fn reference_normalization() {
        let (n, e_d) = perp();
        let p = DimensionlessParams::new(0.0, 1e-3).unwrap();
        for v in [RateVariant::F, RateVariant::FPrime] {
            let r = golden_rule_rate(v, &Vector3::zeros(), &n, &e_d, &p, CouplingModel::FULL_ROENTGEN).unwrap();
            assert!((r.value - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn variants_split_at_first_order() {
        let (n, e_d) = perp();
        let rel = |eps: f64| {
            let p = DimensionlessParams::new(eps, 1e-3).unwrap();
            let f = golden_rule_rate(RateVariant::F, &Vector3::zeros(), &n, &e_d, &p, CouplingModel::FULL_ROENTGEN)
                .unwrap();
            let fp =
                golden_rule_rate(RateVariant::FPrime, &Vector3::zeros(), &n, &e_d, &p, CouplingModel::FULL_ROENTGEN)
                    .unwrap();
            (fp.value - f.value).abs() / f.value
        };
        let ratio = rel(1e-3) / rel(5e-4);
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn sphere_integral_of_reference_rate() {
        let e_d = UnitVector3::z_axis();
        let p = DimensionlessParams::new(0.0, 1e-3).unwrap();
        let (u, w) = gauss_legendre(8);
        let mut total = 0.0;
        for (u, w) in u.iter().zip(&w) {
            let n = direction_from_angles(e_d, u.acos(), 0.0).unwrap();
            let r = golden_rule_rate(RateVariant::F, &Vector3::zeros(), &n, &e_d, &p, CouplingModel::StandardDipole)
                .unwrap();
            total += w * 2.0 * PI * r.per_steradian();
        }
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn perpendicular_shifted_rate_closed_form() {
        let (n, e_d) = perp();
        let beta = Vector3::new(0.02, 0.01, -0.03);
        let p = DimensionlessParams::new(0.01, 1e-3).unwrap();
        let r = golden_rule_rate(RateVariant::FPrime, &beta, &n, &e_d, &p, CouplingModel::FULL_ROENTGEN).unwrap();
        let (d, x, e) = (0.02, r.x_star, 0.01);
        let expected = x.powi(3) * (1.0 - d - e * x).powi(2) / (1.0 - d + 2.0 * e * x);
        assert!((r.value - expected).abs() < 1e-14 * expected);
    }
}
