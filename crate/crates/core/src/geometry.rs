//! Emission directions, linear polarization bases and the dipole axis.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-12;

/// A direction in space, normalized to unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector3(Vector3<f64>);

impl UnitVector3 {
    /// Normalizes `(x, y, z)`; fails for the zero vector or non-finite input.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::normalize(Vector3::new(x, y, z))
    }

    pub fn normalize(v: Vector3<f64>) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::Geometry(format!("cannot normalize {:?}", v.as_slice())));
        }
        Ok(Self(v / norm))
    }

    /// Wraps a vector that is already of unit length.
    pub fn from_unit(v: Vector3<f64>) -> Result<Self> {
        if ((v.norm() - 1.0).abs()) > UNIT_TOL {
            return Err(Error::Geometry(format!(
                "vector {:?} has norm {}, expected 1",
                v.as_slice(),
                v.norm()
            )));
        }
        Ok(Self(v))
    }

    pub fn x_axis() -> Self {
        Self(Vector3::x())
    }

    pub fn y_axis() -> Self {
        Self(Vector3::y())
    }

    pub fn z_axis() -> Self {
        Self(Vector3::z())
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn dot(&self, v: &Vector3<f64>) -> f64 {
        self.0.dot(v)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }
}

impl TryFrom<[f64; 3]> for UnitVector3 {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<UnitVector3> for [f64; 3] {
    fn from(v: UnitVector3) -> Self {
        v.to_array()
    }
}

impl std::ops::Deref for UnitVector3 {
    type Target = Vector3<f64>;

    fn deref(&self) -> &Vector3<f64> {
        &self.0
    }
}

/// Right-handed orthonormal triad `(e1, e2, n)` with `e1 x e2 = n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationBasis {
    pub e1: UnitVector3,
    pub e2: UnitVector3,
    pub n: UnitVector3,
}

impl PolarizationBasis {
    pub fn polarizations(&self) -> [UnitVector3; 2] {
        [self.e1, self.e2]
    }

    /// Largest deviation from orthonormality and right-handedness.
    pub fn orthonormality_defect(&self) -> f64 {
        let (e1, e2, n) = (&self.e1.0, &self.e2.0, &self.n.0);
        [
            (e1.norm() - 1.0).abs(),
            (e2.norm() - 1.0).abs(),
            (n.norm() - 1.0).abs(),
            e1.dot(e2).abs(),
            e1.dot(n).abs(),
            e2.dot(n).abs(),
            (e1.cross(e2) - n).amax(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Builds a polarization basis transverse to `n`.
///
/// With a `preferred` vector, `e1` is its component transverse to `n`
/// (exactly `preferred` when it is already perpendicular). Without one,
/// `e1` is built from the coordinate axis least aligned with `n`.
pub fn polarization_basis(
    n: UnitVector3,
    preferred: Option<UnitVector3>,
) -> Result<PolarizationBasis> {
    let e1 = match preferred {
        Some(p) => {
            let along = p.dot(&n);
            if along == 0.0 {
                p
            } else {
                let transverse = p.0 - along * n.0;
                if transverse.norm() < UNIT_TOL {
                    return Err(Error::Geometry(
                        "preferred polarization is parallel to the propagation direction".into(),
                    ));
                }
                UnitVector3::normalize(transverse)?
            }
        }
        None => {
            let abs = n.0.abs();
            let axis = if abs.x <= abs.y && abs.x <= abs.z {
                Vector3::x()
            } else if abs.y <= abs.z {
                Vector3::y()
            } else {
                Vector3::z()
            };
            UnitVector3::normalize(axis - axis.dot(&n.0) * n.0)?
        }
    };
    let e2 = UnitVector3(n.0.cross(&e1.0));
    Ok(PolarizationBasis { e1, e2, n })
}

/// Rotates the polarization vectors about `n` by `angle` radians.
pub fn rotate_basis(b: &PolarizationBasis, angle: f64) -> PolarizationBasis {
    let (s, c) = angle.sin_cos();
    PolarizationBasis {
        e1: UnitVector3(c * b.e1.0 + s * b.e2.0),
        e2: UnitVector3(-s * b.e1.0 + c * b.e2.0),
        n: b.n,
    }
}

/// Direction at polar angle `theta` from `axis` and azimuth `phi`, measured
/// from the `e1` vector of `polarization_basis(axis, None)`.
pub fn direction_from_angles(axis: UnitVector3, theta: f64, phi: f64) -> Result<UnitVector3> {
    let frame = polarization_basis(axis, None)?;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    UnitVector3::normalize(st * cp * frame.e1.0 + st * sp * frame.e2.0 + ct * axis.0)
}

/// A direction perpendicular to `axis` (polar angle pi/2, azimuth 0).
pub fn perpendicular_to(axis: UnitVector3) -> Result<UnitVector3> {
    Ok(polarization_basis(axis, None)?.e1)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn close(a: &UnitVector3, b: &UnitVector3, tol: f64) -> bool {
        (a.0 - b.0).amax() <= tol
    }

    #[test]
    fn canonical_axes() {
        let b = polarization_basis(UnitVector3::z_axis(), Some(UnitVector3::x_axis())).unwrap();
        assert_eq!(b.e1, UnitVector3::x_axis());
        assert_eq!(b.e2, UnitVector3::y_axis());
    }

    #[test]
    fn default_basis_is_valid() {
        let b = polarization_basis(UnitVector3::z_axis(), None).unwrap();
        assert!(b.orthonormality_defect() <= 1e-12);
        let diag = UnitVector3::new(1.0, 1.0, 1.0).unwrap();
        let b = polarization_basis(diag, None).unwrap();
        assert!(b.orthonormality_defect() <= 1e-12);
    }

    #[test]
    fn preferred_parallel_is_rejected() {
        let n = UnitVector3::z_axis();
        let flipped = UnitVector3::new(0.0, 0.0, -1.0).unwrap();
        assert!(polarization_basis(n, Some(n)).is_err());
        assert!(polarization_basis(n, Some(flipped)).is_err());
    }

    #[test]
    fn rotation_quarter_and_full_turn() {
        let b = polarization_basis(UnitVector3::new(0.3, -0.2, 0.9).unwrap(), None).unwrap();
        assert_eq!(rotate_basis(&b, 0.0), b);
        let q = rotate_basis(&b, FRAC_PI_2);
        assert!(close(&q.e1, &b.e2, 1e-15));
        assert!((q.e2.0 + b.e1.0).amax() <= 1e-15);
        let full = rotate_basis(&b, 2.0 * PI);
        assert!(close(&full.e1, &b.e1, 1e-12) && close(&full.e2, &b.e2, 1e-12));
    }

    #[test]
    fn angles_relative_to_axis() {
        let z = UnitVector3::z_axis();
        let n = direction_from_angles(z, FRAC_PI_2, 0.0).unwrap();
        assert!(close(&n, &UnitVector3::x_axis(), 1e-15));
        let n = direction_from_angles(z, 0.0, 1.3).unwrap();
        assert!(close(&n, &z, 1e-15));
    }

    #[test]
    fn unit_vector_rejects_zero() {
        assert!(UnitVector3::new(0.0, 0.0, 0.0).is_err());
        assert!(UnitVector3::from_unit(Vector3::new(2.0, 0.0, 0.0)).is_err());
    }
}
