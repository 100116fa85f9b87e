//! Reduced atom-field coupling with the field amplitude and dipole strength
//! divided out.
//!
//! For the Roentgen-corrected interaction the coupling of polarization mode
//! `e` propagating along `n` at frequency `x` is
//!
//! ```text
//! G = (e_d . e) [1 - n.beta + eps x] + (e_d . n)(e . beta)
//! ```
//!
//! where the `eps x` recoil term may be switched off and `beta` may be
//! replaced by the velocity after photon emission, `beta + 2 eps x n`. The
//! standard dipole coupling is `G = e_d . e`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{polarization_basis, PolarizationBasis, UnitVector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingModel {
    /// `-d . E` with a momentum-independent coupling.
    StandardDipole,
    Roentgen {
        /// Keep the `eps x` recoil contribution inside the bracket.
        recoil_term: bool,
        /// Evaluate the coupling at the post-emission momentum `p + hbar k`.
        momentum_shift: bool,
    },
}

impl CouplingModel {
    /// Roentgen coupling with every term active.
    pub const FULL_ROENTGEN: CouplingModel = CouplingModel::Roentgen {
        recoil_term: true,
        momentum_shift: true,
    };

    pub fn label(&self) -> &'static str {
        match self {
            CouplingModel::StandardDipole => "standard",
            CouplingModel::Roentgen {
                recoil_term: true,
                momentum_shift: true,
            } => "roentgen",
            CouplingModel::Roentgen {
                recoil_term: false,
                momentum_shift: true,
            } => "roentgen_no_recoil",
            CouplingModel::Roentgen {
                recoil_term: true,
                momentum_shift: false,
            } => "roentgen_no_shift",
            CouplingModel::Roentgen {
                recoil_term: false,
                momentum_shift: false,
            } => "roentgen_bare",
        }
    }

    pub fn is_roentgen(&self) -> bool {
        matches!(self, CouplingModel::Roentgen { .. })
    }

    fn recoil_weight(&self) -> f64 {
        match self {
            CouplingModel::Roentgen {
                recoil_term: true, ..
            } => 1.0,
            _ => 0.0,
        }
    }

    fn shifts(&self) -> bool {
        matches!(
            self,
            CouplingModel::Roentgen {
                momentum_shift: true,
                ..
            }
        )
    }
}

/// Dimensionless coupling `G` of a single polarization mode.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ReducedCoupling(pub f64);

/// Velocity after emitting a photon of frequency `x` along `n`:
/// `hbar k / (M c) = 2 eps x` in reduced units.
pub fn shifted_velocity(beta: &Vector3<f64>, x: f64, n: &UnitVector3, epsilon: f64) -> Vector3<f64> {
    beta + (2.0 * epsilon * x) * n.as_vector()
}

fn effective_velocity(
    model: CouplingModel,
    beta: &Vector3<f64>,
    x: f64,
    n: &UnitVector3,
    epsilon: f64,
) -> Vector3<f64> {
    if model.shifts() {
        shifted_velocity(beta, x, n, epsilon)
    } else {
        *beta
    }
}

/// The bracket `1 - n.beta_eff + eps x` multiplying `e_d . e`.
fn bracket(model: CouplingModel, beta_eff: &Vector3<f64>, x: f64, n: &UnitVector3, epsilon: f64) -> f64 {
    1.0 - n.dot(beta_eff) + model.recoil_weight() * epsilon * x
}

pub fn reduced_coupling(
    model: CouplingModel,
    beta: &Vector3<f64>,
    x: f64,
    n: &UnitVector3,
    e_lambda: &UnitVector3,
    e_d: &UnitVector3,
    epsilon: f64,
) -> ReducedCoupling {
    let overlap = e_d.dot(e_lambda);
    let g = match model {
        CouplingModel::StandardDipole => overlap,
        CouplingModel::Roentgen { .. } => {
            let beta_eff = effective_velocity(model, beta, x, n, epsilon);
            overlap * bracket(model, &beta_eff, x, n, epsilon)
                + e_d.dot(n) * e_lambda.dot(&beta_eff)
        }
    };
    debug_assert!(
        g.abs() <= 1.0 + 2.0 * beta.norm() + 3.0 * epsilon * x + 1e-12,
        "coupling {g} outside coarse bound"
    );
    ReducedCoupling(g)
}

/// `sum_lambda G_lambda^2` over the two transverse polarizations, in closed
/// form: with `v = A e_d + (e_d . n) beta_eff` every `G_lambda = e_lambda . v`,
/// so the sum is the squared transverse part of `v`.
pub fn polarization_sum(
    model: CouplingModel,
    beta: &Vector3<f64>,
    x: f64,
    n: &UnitVector3,
    e_d: &UnitVector3,
    epsilon: f64,
) -> f64 {
    let v = match model {
        CouplingModel::StandardDipole => *e_d.as_vector(),
        CouplingModel::Roentgen { .. } => {
            let beta_eff = effective_velocity(model, beta, x, n, epsilon);
            bracket(model, &beta_eff, x, n, epsilon) * e_d.as_vector() + e_d.dot(n) * beta_eff
        }
    };
    let along = n.dot(&v);
    (v.norm_squared() - along * along).max(0.0)
}

/// The same sum evaluated mode by mode in an explicit basis.
pub fn polarization_sum_in_basis(
    model: CouplingModel,
    beta: &Vector3<f64>,
    x: f64,
    basis: &PolarizationBasis,
    e_d: &UnitVector3,
    epsilon: f64,
) -> f64 {
    basis
        .polarizations()
        .iter()
        .map(|e| reduced_coupling(model, beta, x, &basis.n, e, e_d, epsilon).0.powi(2))
        .sum()
}

/// Basis used for explicit polarization sums: `e1 = e_d` (up to its
/// transverse projection) whenever `e_d` is not along `n`.
pub fn default_basis(n: UnitVector3, e_d: UnitVector3) -> PolarizationBasis {
    polarization_basis(n, Some(e_d))
        .or_else(|_| polarization_basis(n, None))
        .expect("unit propagation direction always admits a basis")
}
