use std::f64::consts::PI;
use std::path::Path;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Resolved, ScenarioConfig};
use super::manifest::RunManifest;
use crate::amplitudes::{
    closed_form_kernel, discrete_mode_evolution, fit_decay_rate, pole_mode_populations, relative_l2,
    spectral_kernel, DiscreteModeSystem,
};
use crate::coupling::CouplingModel;
use crate::error::{Error, Result};
use crate::geometry::{direction_from_angles, polarization_basis, UnitVector3};
use crate::quadrature::QuadratureResult;
use crate::rates::{golden_rule_rate, limit_ordering_demo, LimitOrderingOptions, RateVariant};
use crate::spectra::{
    angular_pattern, directional_probability, directional_spectrum, divergence_comparison, sphere_integral,
    Formfactor, PatternMode, PatternPoint,
};
use crate::units::DimensionlessParams;

/// Formats a float with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Numerical(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

pub struct RunContext<'a> {
    pub subcommand: &'a str,
    pub config: ScenarioConfig,
    pub out: &'a Path,
    pub seed: u64,
}

pub fn execute(ctx: RunContext<'_>) -> Result<RunManifest> {
    let resolved = ctx.config.resolve()?;
    std::fs::create_dir_all(ctx.out)?;
    let mut manifest = RunManifest::new(
        ctx.subcommand,
        &ctx.config,
        ctx.seed,
        resolved.scenario.params,
        resolved.normalization,
    )?;
    let outcome = match ctx.subcommand {
        "spectrum" => spectrum(&resolved, ctx.out, &mut manifest),
        "probability" => probability(&resolved, ctx.out, &mut manifest),
        "divergence" => divergence(&resolved, ctx.out, &mut manifest),
        "rates" => rates(&resolved, ctx.out, &mut manifest),
        "pattern" => pattern(&resolved, ctx.out, &mut manifest),
        "oracle" => oracle(&resolved, ctx.seed, ctx.out, &mut manifest),
        other => Err(Error::Config(format!("unknown subcommand `{other}`"))),
    };
    for w in &manifest.warnings {
        log::warn!("{w}");
    }
    // Partial results are still recorded when a numerical check fails.
    manifest.save(ctx.out)?;
    outcome.map(|_| manifest)
}

fn spectrum(r: &Resolved, out: &Path, m: &mut RunManifest) -> Result<()> {
    let grid = r.config.x_grid()?;
    let s = directional_spectrum(&r.scenario, &r.direction, &grid, &r.spectrum)?;
    m.warnings.extend(s.warnings.iter().cloned());
    let rows = (0..s.x.len()).map(|k| vec![fmt_float(s.x[k]), fmt_float(s.w[k]), fmt_float(s.error[k])]);
    m.write_output(out, "spectrum.csv", &csv_bytes(&["x", "w", "error"], rows)?)
}

#[derive(Serialize)]
struct ProbabilityReport {
    direction: [f64; 3],
    formfactor: Formfactor,
    lower: f64,
    upper: f64,
    result: QuadratureResult,
}

fn require_converged(what: &str, r: &QuadratureResult) -> Result<()> {
    if r.converged {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "{what} did not converge: estimate {:e} with error {:e} after {} evaluations",
            r.value, r.error_estimate, r.evaluations
        )))
    }
}

fn probability(r: &Resolved, out: &Path, m: &mut RunManifest) -> Result<()> {
    let upper = r.probability_upper()?;
    let lower = r.config.probability.lower;
    if !r.formfactor.is_regularizing() && r.scenario.model.is_roentgen() && r.scenario.params.epsilon > 0.0 {
        m.warnings.push(format!(
            "no formfactor: the result grows roughly as upper^2 and is only meaningful for the stated limit {upper}"
        ));
    }
    let result = directional_probability(&r.scenario, &r.direction, &r.formfactor, lower, upper, &r.spectrum)?;
    let report = ProbabilityReport {
        direction: r.direction.to_array(),
        formfactor: r.formfactor,
        lower,
        upper,
        result,
    };
    m.write_output(out, "probability.json", &json_bytes(&report)?)?;
    require_converged("directional probability", &result)
}

fn divergence(r: &Resolved, out: &Path, m: &mut RunManifest) -> Result<()> {
    let lambdas = r.config.lambdas()?;
    let report = divergence_comparison(&r.scenario, &r.direction, &lambdas, &r.spectrum, &r.config.tail_options())?;
    for model in &report.models {
        let rows = model.scan.points.iter().map(|p| {
            vec![fmt_float(p.lambda), fmt_float(p.cumulative), fmt_float(p.error_estimate)]
        });
        let bytes = csv_bytes(&["lambda", "cumulative_integral", "error_estimate"], rows)?;
        m.write_output(out, &format!("scan_{}.csv", model.label), &bytes)?;
    }
    m.write_output(out, "divergence.json", &json_bytes(&report)?)?;
    for model in &report.models {
        if !model.scan.converged {
            return Err(Error::Numerical(format!("cutoff scan for {} did not converge", model.label)));
        }
    }
    Ok(())
}

fn rates(r: &Resolved, out: &Path, m: &mut RunManifest) -> Result<()> {
    let cfg = &r.config.rates;
    let e_d = r.scenario.e_d;
    let mut rows = Vec::new();
    for &epsilon in &cfg.epsilons {
        let params = DimensionlessParams::new(epsilon, r.scenario.params.gamma_tilde)?;
        for &delta in &cfg.deltas {
            for &theta in &cfg.thetas {
                let n = direction_from_angles(e_d, theta, r.config.geometry.phi)?;
                let beta = delta * n.as_vector();
                for variant in [RateVariant::F, RateVariant::FPrime] {
                    let rate = golden_rule_rate(variant, &beta, &n, &e_d, &params, r.scenario.model)?;
                    rows.push(vec![
                        variant.label().to_string(),
                        fmt_float(epsilon),
                        fmt_float(delta),
                        fmt_float(theta),
                        fmt_float(rate.per_steradian()),
                        fmt_float(rate.x_star),
                    ]);
                }
            }
        }
    }
    let bytes = csv_bytes(&["variant", "epsilon", "delta", "theta", "rate", "x_star"], rows)?;
    m.write_output(out, "rates.csv", &bytes)?;

    let opts = LimitOrderingOptions {
        cutoffs: cfg.cutoffs.clone(),
        quadrature: r.spectrum.quadrature.clone(),
        ..LimitOrderingOptions::default()
    };
    let table = limit_ordering_demo(
        &cfg.epsilons,
        &Vector3::zeros(),
        &r.direction,
        &e_d,
        r.scenario.params.gamma_tilde,
        &opts,
    )?;
    let mut lo_rows = Vec::new();
    for row in &table {
        let exponent = row.growth.and_then(|g| g.exponent).unwrap_or(f64::NAN);
        for (cutoff, value) in row.cutoffs.iter().zip(&row.mode_sum_first) {
            lo_rows.push(vec![
                fmt_float(row.epsilon),
                fmt_float(row.x_star),
                fmt_float(row.rate_f),
                fmt_float(row.rate_f_prime),
                fmt_float(row.relative_difference),
                fmt_float(*cutoff),
                fmt_float(*value),
                fmt_float(exponent),
            ]);
        }
    }
    let header = [
        "epsilon",
        "x_star",
        "rate_f",
        "rate_f_prime",
        "relative_difference",
        "cutoff",
        "mode_sum_first",
        "growth_exponent",
    ];
    m.write_output(out, "limit_ordering.csv", &csv_bytes(&header, lo_rows)?)
}

#[derive(Serialize)]
struct PatternReport {
    mode: PatternMode,
    phi: f64,
    points: Vec<PatternPoint>,
    sphere_integral: f64,
}

fn pattern(r: &Resolved, out: &Path, m: &mut RunManifest) -> Result<()> {
    let mode = r.pattern_mode()?;
    let cfg = &r.config.pattern;
    let points = angular_pattern(&r.scenario, &cfg.thetas()?, cfg.phi, &mode, &r.spectrum)?;
    let total = sphere_integral(&r.scenario, &mode, cfg.polar_order, cfg.azimuth_points, &r.spectrum)?;
    let rows = points
        .iter()
        .map(|p| vec![fmt_float(p.theta), fmt_float(p.value), fmt_float(p.error)]);
    m.write_output(out, "pattern.csv", &csv_bytes(&["theta", "value", "error"], rows)?)?;
    let report = PatternReport {
        mode,
        phi: cfg.phi,
        points,
        sphere_integral: total,
    };
    m.write_output(out, "pattern.json", &json_bytes(&report)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructuralCheck {
    pub seed: u64,
    pub samples: usize,
    pub worst_relative_error: f64,
}

/// Compares the general-geometry kernel with the perpendicular closed form
/// at random frequencies, velocities, parameters and dipole orientations.
pub fn structural_check(seed: u64, samples: usize) -> Result<StructuralCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = 10f64.powf(rng.gen_range(-1.3..1.3));
        let delta = rng.gen_range(-0.3..0.3);
        let params = DimensionlessParams::new(10f64.powf(rng.gen_range(-6.0..-2.0)), 10f64.powf(rng.gen_range(-6.0..-1.0)))?;
        let theta = rng.gen_range(0.0..PI);
        let phi = rng.gen_range(0.0..2.0 * PI);
        let e_d = direction_from_angles(UnitVector3::z_axis(), theta, phi)?;
        let n = polarization_basis(e_d, None)?.e1;
        let side = n.as_vector().cross(e_d.as_vector());
        let beta = delta * n.as_vector() + rng.gen_range(-0.3..0.3) * side;
        let general = spectral_kernel(CouplingModel::FULL_ROENTGEN, x, &n, &beta, &params, &e_d)?.value;
        let closed = closed_form_kernel(x, delta, &params)?;
        worst = worst.max(((general - closed) / closed).abs());
    }
    Ok(StructuralCheck {
        seed,
        samples,
        worst_relative_error: worst,
    })
}

#[derive(Serialize)]
struct OracleReport {
    modes: usize,
    spacing: f64,
    time_step: f64,
    duration: f64,
    golden_rule_rate: f64,
    fitted_rate: Option<f64>,
    rate_relative_error: Option<f64>,
    photon_distribution_l2: f64,
    max_norm_drift: f64,
    norm_ok: bool,
    structural_check: StructuralCheck,
}

fn oracle(r: &Resolved, seed: u64, out: &Path, m: &mut RunManifest) -> Result<()> {
    let cfg = r.config.oracle;
    let gamma = cfg.gamma.unwrap_or(r.scenario.params.gamma_tilde);
    let duration = cfg.duration.unwrap_or(12.0 / gamma);
    if cfg.modes == 0 || cfg.spacing.is_nan() || cfg.spacing <= 0.0 {
        return Err(Error::invalid("oracle.modes", "need at least one mode and a positive spacing"));
    }
    let sys = DiscreteModeSystem::flat_band(cfg.modes, cfg.spacing, gamma, cfg.time_step, duration);
    let evolution = discrete_mode_evolution(&sys)?;
    let golden = sys.golden_rule_rate();
    let fitted = fit_decay_rate(
        &evolution.times,
        &evolution.excited_population,
        1.0 / gamma,
        (8.0 / gamma).min(duration),
    );
    let pole = pole_mode_populations(&sys, golden, duration);
    let l2 = relative_l2(&evolution.final_mode_populations, &pole);

    let rows = evolution
        .times
        .iter()
        .zip(&evolution.excited_population)
        .map(|(t, p)| vec![fmt_float(*t), fmt_float(*p), fmt_float((-golden * t).exp())]);
    m.write_output(out, "oracle_decay.csv", &csv_bytes(&["t", "excited_population", "pole"], rows)?)?;
    let rows = sys
        .modes
        .iter()
        .zip(&evolution.final_mode_populations)
        .zip(&pole)
        .map(|((mode, ode), pole)| vec![fmt_float(mode.energy), fmt_float(*ode), fmt_float(*pole)]);
    m.write_output(out, "oracle_populations.csv", &csv_bytes(&["energy", "ode", "pole"], rows)?)?;

    let report = OracleReport {
        modes: cfg.modes,
        spacing: cfg.spacing,
        time_step: cfg.time_step,
        duration,
        golden_rule_rate: golden,
        fitted_rate: fitted,
        rate_relative_error: fitted.map(|f| (f - golden).abs() / golden),
        photon_distribution_l2: l2,
        max_norm_drift: evolution.max_norm_drift,
        norm_ok: evolution.norm_ok,
        structural_check: structural_check(seed, 1000)?,
    };
    m.write_output(out, "oracle.json", &json_bytes(&report)?)?;
    if !evolution.norm_ok {
        return Err(Error::Numerical(format!(
            "norm drift {:e} exceeds the limit; reduce oracle.time_step",
            evolution.max_norm_drift
        )));
    }
    Ok(())
}
