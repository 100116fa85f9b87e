//! Single-pole (Weisskopf-Wigner) amplitudes and the spectral kernel they
//! imply, plus a direct integration of the discrete-mode amplitude
//! equations used to validate the pole approximation.
//!
//! For a fixed atomic momentum the photon amplitude at `t >> 1/gamma` is
//! `|beta|^2 ~ g^2 / (D^2 + gamma^2/4)` with the detuning
//! `D(x, delta, eps) = 1 - x (1 - delta) - eps x^2`: the difference between
//! the initial energy and the energy after emission (the recoiled atom plus
//! the photon), in units of `hbar omega0`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::{polarization_sum, CouplingModel};
use crate::error::{Error, Result};
use crate::geometry::UnitVector3;
use crate::units::DimensionlessParams;

pub fn detuning(x: f64, delta: f64, epsilon: f64) -> f64 {
    1.0 - x * (1.0 - delta) - epsilon * x * x
}

/// Line-shape factor `1 / |z0 - z_k|^2` of the long-time amplitude.
fn stationary_line(d: f64, gamma_tilde: f64, x: f64) -> Result<f64> {
    let denom = d * d + 0.25 * gamma_tilde * gamma_tilde;
    if denom == 0.0 {
        return Err(Error::OnResonanceSingularity { x });
    }
    Ok(1.0 / denom)
}

/// `|exp(-z0 t) - exp(-z_k t)|^2 / |z0 - z_k|^2` at dimensionless time
/// `t` (units of `1/omega0`). Tends to the stationary factor as `t` grows.
pub fn transient_line(d: f64, gamma_tilde: f64, t: f64) -> f64 {
    let half = 0.5 * gamma_tilde;
    let denom = d * d + half * half;
    let decay = (-half * t).exp();
    let numer = 1.0 + decay * decay - 2.0 * decay * (d * t).cos();
    if denom == 0.0 {
        // Limit of the ratio for d, gamma -> 0.
        return t * t;
    }
    numer / denom
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralKernel {
    pub value: f64,
    pub model: CouplingModel,
}

/// Long-time photon spectral density along `n` for atomic velocity `beta`:
/// `x * sum_lambda G^2 / (D^2 + gamma^2/4)`. The detuning uses the
/// pre-emission velocity; the momentum shift only enters the coupling.
pub fn spectral_kernel(
    model: CouplingModel,
    x: f64,
    n: &UnitVector3,
    beta: &Vector3<f64>,
    params: &DimensionlessParams,
    e_d: &UnitVector3,
) -> Result<SpectralKernel> {
    let d = detuning(x, n.dot(beta), params.epsilon);
    let line = stationary_line(d, params.gamma_tilde, x)?;
    let coupling = polarization_sum(model, beta, x, n, e_d, params.epsilon);
    Ok(SpectralKernel {
        value: x * coupling * line,
        model,
    })
}

/// Finite-time variant of [`spectral_kernel`].
pub fn transient_kernel(
    model: CouplingModel,
    x: f64,
    n: &UnitVector3,
    beta: &Vector3<f64>,
    params: &DimensionlessParams,
    e_d: &UnitVector3,
    t: f64,
) -> f64 {
    let d = detuning(x, n.dot(beta), params.epsilon);
    x * polarization_sum(model, beta, x, n, e_d, params.epsilon) * transient_line(d, params.gamma_tilde, t)
}

/// Closed-form kernel for emission perpendicular to the dipole with the
/// full Roentgen coupling evaluated after the recoil:
///
/// ```text
/// x (1 - delta - eps x)^2 / ((1 - x (1 - delta) - eps x^2)^2 + gamma^2/4)
/// ```
pub fn closed_form_kernel(x: f64, delta: f64, params: &DimensionlessParams) -> Result<f64> {
    let numer = 1.0 - delta - params.epsilon * x;
    let d = detuning(x, delta, params.epsilon);
    Ok(x * numer * numer * stationary_line(d, params.gamma_tilde, x)?)
}

/// Coupling factor `sum_lambda G^2` for `n` perpendicular to the dipole.
/// Only the Doppler projection `delta = n . beta` survives there.
pub fn perpendicular_coupling(model: CouplingModel, x: f64, delta: f64, epsilon: f64) -> f64 {
    match model {
        CouplingModel::StandardDipole => 1.0,
        CouplingModel::Roentgen {
            recoil_term,
            momentum_shift,
        } => {
            let recoil = if recoil_term { epsilon * x } else { 0.0 };
            let shift = if momentum_shift { 2.0 * epsilon * x } else { 0.0 };
            let bracket = 1.0 - delta + recoil - shift;
            bracket * bracket
        }
    }
}

/// [`spectral_kernel`] for `n` perpendicular to the dipole, as a function of
/// the Doppler projection only.
pub fn perpendicular_kernel(
    model: CouplingModel,
    x: f64,
    delta: f64,
    params: &DimensionlessParams,
) -> Result<f64> {
    let d = detuning(x, delta, params.epsilon);
    Ok(x * perpendicular_coupling(model, x, delta, params.epsilon) * stationary_line(d, params.gamma_tilde, x)?)
}

/// One field mode of a discretized continuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Energy of the (ground atom + photon) state relative to the excited
    /// atom, in units of `hbar omega0`.
    pub energy: f64,
    /// Real coupling matrix element to the excited state.
    pub coupling: f64,
    /// Spectral width represented by the mode (population / weight is a
    /// spectral density).
    pub weight: f64,
}

/// Excited atom coupled to a finite set of modes:
///
/// ```text
/// i a'   = -i sum_j g_j b_j
/// i b_j' = E_j b_j + i g_j a
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModeSystem {
    pub modes: Vec<Mode>,
    pub time_step: f64,
    pub duration: f64,
    /// Record the excited-state population every this many steps.
    pub sample_every: usize,
}

impl DiscreteModeSystem {
    /// `n_modes` equally spaced modes symmetric about the atomic level,
    /// with the uniform coupling that gives golden-rule rate `gamma`.
    pub fn flat_band(n_modes: usize, spacing: f64, gamma: f64, time_step: f64, duration: f64) -> Self {
        let coupling = (gamma * spacing / (2.0 * std::f64::consts::PI)).sqrt();
        let center = 0.5 * (n_modes as f64 - 1.0);
        let modes = (0..n_modes)
            .map(|j| Mode {
                energy: (j as f64 - center) * spacing,
                coupling,
                weight: spacing,
            })
            .collect();
        Self {
            modes,
            time_step,
            duration,
            sample_every: 10,
        }
    }

    /// Modes along a single direction `n` around the resonance `x_star`,
    /// with mode energies `-D(x_j)` and couplings
    /// `g_j^2 = C x_j^3 sum G^2(x_j) dx`. `C` is fixed so that the golden
    /// rule for this band reproduces `params.gamma_tilde`.
    #[allow(clippy::too_many_arguments)]
    pub fn along_direction(
        model: CouplingModel,
        n: &UnitVector3,
        beta: &Vector3<f64>,
        e_d: &UnitVector3,
        params: &DimensionlessParams,
        half_width: f64,
        n_modes: usize,
        time_step: f64,
        duration: f64,
    ) -> Result<Self> {
        let delta = n.dot(beta);
        let x_star = crate::rates::resonance_frequency(delta, params.epsilon)?.x_star;
        let strength = |x: f64| x.powi(3) * polarization_sum(model, beta, x, n, e_d, params.epsilon);
        let jacobian = 1.0 - delta + 2.0 * params.epsilon * x_star;
        let s_star = strength(x_star);
        if s_star <= 0.0 {
            return Err(Error::Numerical("coupling vanishes at the resonance".into()));
        }
        let scale = params.gamma_tilde * jacobian / (2.0 * std::f64::consts::PI * s_star);
        let dx = 2.0 * half_width / n_modes as f64;
        let modes = (0..n_modes)
            .map(|j| {
                let x = x_star - half_width + (j as f64 + 0.5) * dx;
                Mode {
                    energy: -detuning(x, delta, params.epsilon),
                    coupling: (scale * strength(x) * dx).sqrt(),
                    weight: dx,
                }
            })
            .collect();
        Ok(Self {
            modes,
            time_step,
            duration,
            sample_every: 10,
        })
    }

    /// Golden-rule decay rate `2 pi g^2 / spacing` of the mode nearest to
    /// the atomic level.
    pub fn golden_rule_rate(&self) -> f64 {
        let mode = self
            .modes
            .iter()
            .min_by(|a, b| a.energy.abs().total_cmp(&b.energy.abs()))
            .expect("system has modes");
        2.0 * std::f64::consts::PI * mode.coupling * mode.coupling / mode.weight
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub excited_population: Vec<f64>,
    pub final_mode_populations: Vec<f64>,
    pub max_norm_drift: f64,
    /// Norm drift stayed below `NORM_DRIFT_LIMIT`.
    pub norm_ok: bool,
}

pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

fn derivative(modes: &[Mode], a: Complex64, b: &[Complex64], da: &mut Complex64, db: &mut [Complex64]) {
    let mut acc = Complex64::new(0.0, 0.0);
    for ((m, bj), dbj) in modes.iter().zip(b).zip(db.iter_mut()) {
        acc += m.coupling * bj;
        *dbj = Complex64::new(0.0, -m.energy) * bj + m.coupling * a;
    }
    *da = -acc;
}

/// Fixed-step RK4 integration of the amplitude equations starting from the
/// excited state with an empty field.
pub fn discrete_mode_evolution(sys: &DiscreteModeSystem) -> Result<Evolution> {
    if !(sys.time_step > 0.0 && sys.duration > 0.0) {
        return Err(Error::invalid("time_step", "time step and duration must be positive"));
    }
    let n = sys.modes.len();
    let steps = (sys.duration / sys.time_step).round() as usize;
    let h = sys.time_step;
    let every = sys.sample_every.max(1);
    let mut a = Complex64::new(1.0, 0.0);
    let mut b = vec![Complex64::new(0.0, 0.0); n];
    let (mut k1a, mut k2a, mut k3a, mut k4a) = Default::default();
    let mut k1 = vec![Complex64::default(); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut times = vec![0.0];
    let mut excited = vec![1.0];
    let mut max_drift: f64 = 0.0;
    for step in 1..=steps {
        derivative(&sys.modes, a, &b, &mut k1a, &mut k1);
        for j in 0..n {
            tmp[j] = b[j] + 0.5 * h * k1[j];
        }
        derivative(&sys.modes, a + 0.5 * h * k1a, &tmp, &mut k2a, &mut k2);
        for j in 0..n {
            tmp[j] = b[j] + 0.5 * h * k2[j];
        }
        derivative(&sys.modes, a + 0.5 * h * k2a, &tmp, &mut k3a, &mut k3);
        for j in 0..n {
            tmp[j] = b[j] + h * k3[j];
        }
        derivative(&sys.modes, a + h * k3a, &tmp, &mut k4a, &mut k4);
        a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        for j in 0..n {
            b[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if step % every == 0 || step == steps {
            let pop_a = a.norm_sqr();
            let norm = pop_a + b.iter().map(|z| z.norm_sqr()).sum::<f64>();
            max_drift = max_drift.max((norm - 1.0).abs());
            times.push(step as f64 * h);
            excited.push(pop_a);
        }
    }
    if !max_drift.is_finite() {
        return Err(Error::Numerical("amplitudes diverged; time step too large".into()));
    }
    Ok(Evolution {
        times,
        excited_population: excited,
        final_mode_populations: b.iter().map(|z| z.norm_sqr()).collect(),
        max_norm_drift: max_drift,
        norm_ok: max_drift <= NORM_DRIFT_LIMIT,
    })
}

/// Exponential decay rate from a least-squares fit of `ln P(t)` over the
/// samples with `t_min <= t <= t_max`.
pub fn fit_decay_rate(times: &[f64], populations: &[f64], t_min: f64, t_max: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(populations)
        .filter(|(t, p)| **t >= t_min && **t <= t_max && **p > 0.0)
        .map(|(t, p)| (*t, p.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    Some(-sxy / sxx)
}

/// Single-pole prediction of the mode populations at time `t` for decay
/// rate `gamma`: `g_j^2 |exp(-z0 t) - exp(-z_j t)|^2 / |z0 - z_j|^2`.
pub fn pole_mode_populations(sys: &DiscreteModeSystem, gamma: f64, t: f64) -> Vec<f64> {
    sys.modes
        .iter()
        .map(|m| m.coupling * m.coupling * transient_line(-m.energy, gamma, t))
        .collect()
}

/// Relative L2 distance `|a - b| / |b|`.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    (diff / norm).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(epsilon: f64, gamma_tilde: f64) -> DimensionlessParams {
        DimensionlessParams::new(epsilon, gamma_tilde).unwrap()
    }

    #[test]
    fn detuning_at_zero_frequency() {
        assert_eq!(detuning(0.0, 0.3, 0.1), 1.0);
    }

    #[test]
    fn peak_value_at_rest() {
        let p = params(0.0, 0.01);
        let n = UnitVector3::x_axis();
        let e_d = UnitVector3::z_axis();
        let k = spectral_kernel(CouplingModel::StandardDipole, 1.0, &n, &Vector3::zeros(), &p, &e_d).unwrap();
        assert!((k.value - 40000.0).abs() < 1e-8);
        let k0 = spectral_kernel(CouplingModel::FULL_ROENTGEN, 0.0, &n, &Vector3::zeros(), &p, &e_d).unwrap();
        assert_eq!(k0.value, 0.0);
    }

    #[test]
    fn large_frequency_asymptote() {
        let p = params(0.01, 0.01);
        let x = 1e5;
        let k = perpendicular_kernel(CouplingModel::FULL_ROENTGEN, x, 0.0, &p).unwrap();
        assert!((k - 1.0 / x).abs() < 0.01 / x, "{k}");
    }

    #[test]
    fn closed_form_rest_is_lorentzian() {
        let p = params(0.0, 0.02);
        for x in [0.5f64, 0.99, 1.0, 1.3] {
            let lorentz = x / ((1.0 - x).powi(2) + 0.0001);
            assert!((closed_form_kernel(x, 0.0, &p).unwrap() - lorentz).abs() < 1e-12 * lorentz);
        }
    }

    #[test]
    fn closed_form_numerator_root() {
        let p = params(0.05, 0.01);
        assert!(closed_form_kernel(20.0, 0.0, &p).unwrap().abs() < 1e-25);
    }

    #[test]
    fn doppler_shifted_peak() {
        // Golden-section search on the closed form; the maximum of
        // x / ((1 - 0.9 x)^2 + g^2/4) sits at 1/0.9 as g -> 0.
        let p = params(0.0, 1e-7);
        let f = |x: f64| closed_form_kernel(x, 0.1, &p).unwrap();
        let (mut lo, mut hi) = (1.1, 1.12);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if f(m1) < f(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        assert!((0.5 * (lo + hi) - 1.0 / 0.9).abs() < 1e-6);
    }

    #[test]
    fn zero_linewidth_on_resonance_is_rejected() {
        let p = DimensionlessParams {
            epsilon: 0.0,
            gamma_tilde: 0.0,
        };
        assert!(matches!(
            closed_form_kernel(1.0, 0.0, &p),
            Err(Error::OnResonanceSingularity { .. })
        ));
    }

    #[test]
    fn transient_approaches_stationary() {
        let (d, g) = (0.003, 0.002);
        let late = transient_line(d, g, 1e5);
        assert!((late - 1.0 / (d * d + g * g / 4.0)).abs() < 1e-9 * late);
        assert_eq!(transient_line(d, g, 0.0), 0.0);
    }

    #[test]
    fn decoupled_atom_stays_excited() {
        let mut sys = DiscreteModeSystem::flat_band(20, 0.01, 0.0, 0.1, 50.0);
        sys.sample_every = 1;
        let ev = discrete_mode_evolution(&sys).unwrap();
        assert!(ev.excited_population.iter().all(|&p| p == 1.0));
        assert!(ev.final_mode_populations.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn decay_fit_recovers_rate() {
        let t: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let p: Vec<f64> = t.iter().map(|t| (-0.03 * t).exp()).collect();
        assert!((fit_decay_rate(&t, &p, 10.0, 90.0).unwrap() - 0.03).abs() < 1e-12);
    }
}
