use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingModel;
use crate::error::{Error, Result};
use crate::geometry::{direction_from_angles, perpendicular_to, UnitVector3};
use crate::quadrature::{geometric_grid, AdaptiveOptions, TailOptions};
use crate::rates::RateVariant;
use crate::spectra::{AtomScenario, AverageStrategy, Formfactor, PatternMode, SpectrumOptions, TENSOR_HERMITE_ORDER};
use crate::units::{to_dimensionless, DimensionlessParams, Normalization, PhysicalInput};
use crate::wavepacket::{read_tabulated_csv, MomentumDistribution};

/// Scenario file contents. TOML or JSON with the same structure.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub physical: Option<PhysicalInput>,
    pub dimensionless: Option<DimensionlessParams>,
    #[serde(default)]
    pub coupling: CouplingConfig,
    /// Dipole orientation; defaults to the z axis.
    pub dipole: Option<[f64; 3]>,
    #[serde(default)]
    pub momentum: MomentumConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub formfactor: FormfactorConfig,
    #[serde(default)]
    pub probability: ProbabilityConfig,
    #[serde(default)]
    pub pattern: PatternConfig,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    #[default]
    Roentgen,
    Standard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default)]
    pub model: ModelName,
    #[serde(default = "yes")]
    pub recoil_term: bool,
    #[serde(default = "yes")]
    pub momentum_shift: bool,
}

fn yes() -> bool {
    true
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            model: ModelName::Roentgen,
            recoil_term: true,
            momentum_shift: true,
        }
    }
}

impl CouplingConfig {
    pub fn model(&self) -> CouplingModel {
        match self.model {
            ModelName::Standard => CouplingModel::StandardDipole,
            ModelName::Roentgen => CouplingModel::Roentgen {
                recoil_term: self.recoil_term,
                momentum_shift: self.momentum_shift,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentumConfig {
    Point {
        #[serde(default)]
        beta: [f64; 3],
    },
    Gaussian {
        #[serde(default)]
        mean: [f64; 3],
        /// Isotropic width; alternative to `covariance`.
        sigma: Option<f64>,
        covariance: Option<[[f64; 3]; 3]>,
    },
    Tabulated {
        /// CSV of `delta,weight` rows, relative to the config file.
        file: PathBuf,
        direction: [f64; 3],
    },
}

impl Default for MomentumConfig {
    fn default() -> Self {
        MomentumConfig::Point { beta: [0.0; 3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Polar angle from the dipole axis; omitted means perpendicular.
    pub theta: Option<f64>,
    #[serde(default)]
    pub phi: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { theta: None, phi: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            lambda_min: 1e2,
            lambda_max: 1e4,
            points: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormfactorKind {
    #[default]
    None,
    Sharp,
    Gaussian,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormfactorConfig {
    #[serde(default)]
    pub kind: FormfactorKind,
    pub cutoff: Option<f64>,
}

impl FormfactorConfig {
    pub fn resolve(&self) -> Result<Formfactor> {
        let cutoff = || {
            self.cutoff
                .ok_or_else(|| Error::invalid("formfactor.cutoff", "required unless kind = \"none\""))
        };
        Ok(match self.kind {
            FormfactorKind::None => Formfactor::None,
            FormfactorKind::Sharp => Formfactor::Sharp { cutoff: cutoff()? },
            FormfactorKind::Gaussian => Formfactor::Gaussian { cutoff: cutoff()? },
            FormfactorKind::Exponential => Formfactor::Exponential { cutoff: cutoff()? },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbabilityConfig {
    #[serde(default)]
    pub lower: f64,
    /// Upper frequency limit; defaults to ten formfactor cutoffs.
    pub upper: Option<f64>,
}

impl Default for ProbabilityConfig {
    fn default() -> Self {
        Self { lower: 0.0, upper: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternModeName {
    #[default]
    GoldenRule,
    Formfactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternConfig {
    #[serde(default)]
    pub mode: PatternModeName,
    #[serde(default = "default_variant")]
    pub variant: RateVariant,
    /// Angles from the dipole axis; overrides `theta_points`.
    pub thetas: Option<Vec<f64>>,
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
    #[serde(default)]
    pub phi: f64,
    /// Sphere-integral resolution (Gauss-Legendre order in cos theta).
    #[serde(default = "default_polar_order")]
    pub polar_order: usize,
    #[serde(default = "default_azimuth_points")]
    pub azimuth_points: usize,
}

fn default_variant() -> RateVariant {
    RateVariant::F
}

fn default_theta_points() -> usize {
    19
}

fn default_polar_order() -> usize {
    16
}

fn default_azimuth_points() -> usize {
    8
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            mode: PatternModeName::GoldenRule,
            variant: RateVariant::F,
            thetas: None,
            theta_points: default_theta_points(),
            phi: 0.0,
            polar_order: default_polar_order(),
            azimuth_points: default_azimuth_points(),
        }
    }
}

impl PatternConfig {
    pub fn thetas(&self) -> Result<Vec<f64>> {
        if let Some(t) = &self.thetas {
            if t.is_empty() || t.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("pattern.thetas", "must be a non-empty list of finite angles"));
            }
            return Ok(t.clone());
        }
        if self.theta_points < 2 {
            return Err(Error::invalid("pattern.theta_points", "need at least 2"));
        }
        let m = self.theta_points - 1;
        Ok((0..=m).map(|k| std::f64::consts::PI * k as f64 / m as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_rate_thetas")]
    pub thetas: Vec<f64>,
    #[serde(default = "default_cutoffs")]
    pub cutoffs: Vec<f64>,
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

fn default_deltas() -> Vec<f64> {
    vec![0.0]
}

fn default_rate_thetas() -> Vec<f64> {
    vec![std::f64::consts::FRAC_PI_2]
}

fn default_cutoffs() -> Vec<f64> {
    vec![1e2, 1e3, 1e4]
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            epsilons: default_epsilons(),
            deltas: default_deltas(),
            thetas: default_rate_thetas(),
            cutoffs: default_cutoffs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub modes: usize,
    /// Mode spacing in units of `hbar omega0`.
    pub spacing: f64,
    /// Golden-rule rate of the band; defaults to the scenario's `gamma_tilde`.
    pub gamma: Option<f64>,
    pub time_step: f64,
    /// Evolution time; defaults to twelve lifetimes.
    pub duration: Option<f64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            modes: 2000,
            spacing: 1e-4,
            gamma: None,
            time_step: 0.25,
            duration: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_panels")]
    pub max_panels: usize,
    #[serde(default = "default_hermite_order")]
    pub hermite_order: usize,
}

fn default_rel_tol() -> f64 {
    1e-10
}

fn default_max_panels() -> usize {
    4000
}

fn default_hermite_order() -> usize {
    TENSOR_HERMITE_ORDER
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rel_tol: default_rel_tol(),
            max_panels: default_max_panels(),
            hermite_order: default_hermite_order(),
        }
    }
}

fn vector(field: &'static str, v: [f64; 3]) -> Result<Vector3<f64>> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(Vector3::from(v))
    } else {
        Err(Error::invalid(field, "components must be finite"))
    }
}

/// A validated scenario ready for the engine.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ScenarioConfig,
    pub scenario: AtomScenario,
    pub direction: UnitVector3,
    pub normalization: Normalization,
    pub spectrum: SpectrumOptions,
    pub formfactor: Formfactor,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut config: ScenarioConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        // Relative data files are resolved next to the config.
        if let MomentumConfig::Tabulated { file, .. } = &mut config.momentum {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(config)
    }

    pub fn params(&self) -> Result<(DimensionlessParams, Normalization)> {
        match (&self.physical, &self.dimensionless) {
            (Some(p), None) => Ok((to_dimensionless(p)?, Normalization::from_physical(p)?)),
            (None, Some(d)) => {
                let d = DimensionlessParams::new(d.epsilon, d.gamma_tilde)?;
                Ok((d, Normalization::normalized(&d)))
            }
            (Some(_), Some(_)) => Err(Error::Config(
                "give exactly one of [physical] and [dimensionless], not both".into(),
            )),
            (None, None) => Err(Error::Config("missing [physical] or [dimensionless] block".into())),
        }
    }

    pub fn distribution(&self) -> Result<MomentumDistribution> {
        match &self.momentum {
            MomentumConfig::Point { beta } => Ok(MomentumDistribution::point(vector("momentum.beta", *beta)?)),
            MomentumConfig::Gaussian {
                mean,
                sigma,
                covariance,
            } => {
                let mean = vector("momentum.mean", *mean)?;
                match (sigma, covariance) {
                    (Some(s), None) => MomentumDistribution::isotropic(mean, *s),
                    (None, Some(c)) => MomentumDistribution::gaussian(
                        mean,
                        Matrix3::from_row_slice(&c.concat()),
                    ),
                    _ => Err(Error::invalid(
                        "momentum.sigma",
                        "give exactly one of `sigma` and `covariance`",
                    )),
                }
            }
            MomentumConfig::Tabulated { file, direction } => {
                let direction = UnitVector3::normalize(vector("momentum.direction", *direction)?)?;
                if !file.exists() {
                    return Err(Error::Config(format!("momentum table {} does not exist", file.display())));
                }
                read_tabulated_csv(file, direction)
            }
        }
    }

    /// Validates the whole config and builds the engine inputs. Command-line
    /// overrides are applied by the caller beforehand.
    pub fn resolve(&self) -> Result<Resolved> {
        let (params, normalization) = self.params()?;
        let e_d = UnitVector3::normalize(vector("dipole", self.dipole.unwrap_or([0.0, 0.0, 1.0]))?)?;
        let tol = &self.tolerances;
        if !(tol.rel_tol > 0.0 && tol.rel_tol < 1.0) {
            return Err(Error::invalid("tolerances.rel_tol", format!("must lie in (0, 1), got {}", tol.rel_tol)));
        }
        if tol.hermite_order == 0 || tol.max_panels == 0 {
            return Err(Error::invalid("tolerances.hermite_order", "orders and budgets must be positive"));
        }
        let distribution = self.distribution()?;
        let direction = match self.geometry.theta {
            None => perpendicular_to(e_d)?,
            Some(theta) => direction_from_angles(e_d, theta, self.geometry.phi)?,
        };
        let spectrum = SpectrumOptions {
            strategy: AverageStrategy::Auto,
            hermite_order: tol.hermite_order,
            quadrature: AdaptiveOptions {
                max_panels: tol.max_panels,
                ..AdaptiveOptions::relative(tol.rel_tol)
            },
        };
        Ok(Resolved {
            config: self.clone(),
            scenario: AtomScenario {
                params,
                e_d,
                model: self.coupling.model(),
                distribution,
            },
            direction,
            normalization,
            spectrum,
            formfactor: self.formfactor.resolve()?,
        })
    }

    pub fn x_grid(&self) -> Result<Vec<f64>> {
        let g = self
            .grid
            .ok_or_else(|| Error::Config("the spectrum subcommand needs a [grid] block".into()))?;
        if !(g.x_min >= 0.0 && g.x_max > g.x_min && g.points >= 2) {
            return Err(Error::invalid("grid", "need 0 <= x_min < x_max and at least 2 points"));
        }
        let step = (g.x_max - g.x_min) / (g.points - 1) as f64;
        Ok((0..g.points).map(|k| g.x_min + k as f64 * step).collect())
    }

    pub fn lambdas(&self) -> Result<Vec<f64>> {
        geometric_grid(self.scan.lambda_min, self.scan.lambda_max, self.scan.points)
    }

    pub fn tail_options(&self) -> TailOptions {
        TailOptions::default()
    }
}

impl Resolved {
    pub fn pattern_mode(&self) -> Result<PatternMode> {
        Ok(match self.config.pattern.mode {
            PatternModeName::GoldenRule => PatternMode::GoldenRule {
                variant: self.config.pattern.variant,
            },
            PatternModeName::Formfactor => PatternMode::Formfactor {
                formfactor: self.formfactor,
                upper: self.probability_upper()?,
            },
        })
    }

    /// Upper frequency limit for directional probabilities.
    pub fn probability_upper(&self) -> Result<f64> {
        if let Some(u) = self.config.probability.upper {
            return Ok(u);
        }
        match self.formfactor {
            Formfactor::None => Err(Error::invalid(
                "probability.upper",
                "required when no formfactor is configured",
            )),
            Formfactor::Sharp { cutoff } => Ok(cutoff),
            Formfactor::Gaussian { cutoff } | Formfactor::Exponential { cutoff } => Ok(10.0 * cutoff),
        }
    }
}
