//! Conversion between SI inputs and the dimensionless parameterization used
//! everywhere else in the crate.
//!
//! Internally frequencies are measured in units of the (renormalized)
//! transition frequency, `x = omega / omega0`, and velocities in units of
//! `c`, `beta = p / (M c)`. The two remaining parameters are the recoil
//! parameter `epsilon = hbar omega0 / (2 M c^2)` and the reduced linewidth
//! `gamma_tilde = gamma0 / omega0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J s (CODATA 2018, exact).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m (CODATA 2018).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Center-of-mass mass of the atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mass {
    /// Mass in kilograms.
    Finite(f64),
    /// The infinite-mass limit, `epsilon = 0`.
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalInput {
    pub mass: Mass,
    /// Transition angular frequency, rad/s.
    pub omega0: f64,
    /// Spontaneous decay rate, rad/s.
    pub gamma0: f64,
    /// Dipole moment, C m. Only needed for absolute normalization.
    pub dipole_moment: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionlessParams {
    pub epsilon: f64,
    pub gamma_tilde: f64,
}

impl DimensionlessParams {
    pub fn new(epsilon: f64, gamma_tilde: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::invalid("epsilon", format!("must be finite and >= 0, got {epsilon}")));
        }
        if !(gamma_tilde.is_finite() && gamma_tilde > 0.0) {
            return Err(Error::invalid(
                "gamma_tilde",
                format!("must be finite and > 0, got {gamma_tilde}"),
            ));
        }
        Ok(Self {
            epsilon,
            gamma_tilde,
        })
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {value}")))
    }
}

pub fn to_dimensionless(input: &PhysicalInput) -> Result<DimensionlessParams> {
    positive("omega0", input.omega0)?;
    positive("gamma0", input.gamma0)?;
    if let Some(d) = input.dipole_moment {
        positive("dipole_moment", d)?;
    }
    let epsilon = match input.mass {
        Mass::Finite(m) => {
            positive("mass", m)?;
            HBAR * input.omega0 / (2.0 * m * SPEED_OF_LIGHT * SPEED_OF_LIGHT)
        }
        Mass::Infinite => 0.0,
    };
    if input.gamma0 >= input.omega0 {
        log::warn!(
            "gamma0 = {:e} is not below omega0 = {:e}; the narrow-line picture does not apply",
            input.gamma0,
            input.omega0
        );
    }
    DimensionlessParams::new(epsilon, input.gamma0 / input.omega0)
}

/// Inverse of [`to_dimensionless`] given the transition frequency that fixes
/// the scale.
pub fn to_physical(
    params: &DimensionlessParams,
    omega0: f64,
    dipole_moment: Option<f64>,
) -> Result<PhysicalInput> {
    positive("omega0", omega0)?;
    let mass = if params.epsilon == 0.0 {
        Mass::Infinite
    } else {
        Mass::Finite(HBAR * omega0 / (2.0 * params.epsilon * SPEED_OF_LIGHT * SPEED_OF_LIGHT))
    };
    Ok(PhysicalInput {
        mass,
        omega0,
        gamma0: params.gamma_tilde * omega0,
        dipole_moment,
    })
}

/// Ordinary (infinite-mass) spontaneous decay rate of a dipole `d` at `omega0`.
pub fn free_space_decay_rate(dipole_moment: f64, omega0: f64) -> f64 {
    dipole_moment.powi(2) * omega0.powi(3) / (3.0 * PI * EPSILON_0 * HBAR * SPEED_OF_LIGHT.powi(3))
}

/// Prefactor turning the dimensionless spectral density `w(x)` into an
/// emission probability per steradian per unit `x`.
///
/// `kappa` is the normalized-units value: with it the resting, infinitely
/// heavy atom with the standard dipole coupling emits with total probability
/// one in the narrow-line limit. The quantization volume cancels between the
/// per-mode field strength and the mode density `V omega^2 / (2 pi c)^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub kappa: f64,
    /// `d^2 omega0^2 / (16 pi^3 eps0 hbar c^3)`, when a dipole moment is known.
    pub kappa_physical: Option<f64>,
}

impl Normalization {
    pub fn normalized(params: &DimensionlessParams) -> Self {
        Self {
            kappa: 3.0 * params.gamma_tilde / (16.0 * PI * PI),
            kappa_physical: None,
        }
    }

    pub fn from_physical(input: &PhysicalInput) -> Result<Self> {
        let params = to_dimensionless(input)?;
        let mut norm = Self::normalized(&params);
        norm.kappa_physical = input.dipole_moment.map(|d| {
            d * d * input.omega0 * input.omega0
                / (16.0 * PI.powi(3) * EPSILON_0 * HBAR * SPEED_OF_LIGHT.powi(3))
        });
        Ok(norm)
    }
}
