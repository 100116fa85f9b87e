use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use roentgen_core::amplitudes::{closed_form_kernel, perpendicular_kernel, spectral_kernel};
use roentgen_core::coupling::{polarization_sum, polarization_sum_in_basis, CouplingModel};
use roentgen_core::geometry::{direction_from_angles, polarization_basis, rotate_basis, UnitVector3};
use roentgen_core::rates::{golden_rule_rate, resonance_frequency, RateVariant};
use roentgen_core::units::{to_dimensionless, DimensionlessParams, Mass, PhysicalInput};
use roentgen_core::wavepacket::{expectation, project, MomentumDistribution, ProjectedDistribution};

fn unit(theta: f64, phi: f64) -> UnitVector3 {
    direction_from_angles(UnitVector3::z_axis(), theta, phi).unwrap()
}

proptest! {
    #[test]
    fn common_rescaling_leaves_dimensionless_parameters(
        mass in 1e-27f64..1e-24,
        omega0 in 1e14f64..1e17,
        ratio in 1e-9f64..1e-3,
        k in 0.1f64..10.0,
    ) {
        let a = PhysicalInput { mass: Mass::Finite(mass), omega0, gamma0: ratio * omega0, dipole_moment: None };
        let b = PhysicalInput { mass: Mass::Finite(k * mass), omega0: k * omega0, gamma0: k * ratio * omega0, dipole_moment: None };
        let (pa, pb) = (to_dimensionless(&a).unwrap(), to_dimensionless(&b).unwrap());
        prop_assert!((pa.epsilon - pb.epsilon).abs() <= 1e-14 * pa.epsilon);
        prop_assert!((pa.gamma_tilde - pb.gamma_tilde).abs() <= 1e-14 * pa.gamma_tilde);
    }

    #[test]
    fn polarization_bases_are_orthonormal(theta in 0.0f64..PI, phi in 0.0f64..2.0 * PI, angle in 0.0f64..2.0 * PI) {
        let b = rotate_basis(&polarization_basis(unit(theta, phi), None).unwrap(), angle);
        prop_assert!(b.orthonormality_defect() <= 1e-12);
    }

    #[test]
    fn polarization_sum_ignores_basis_rotation(
        theta in 0.0f64..PI, phi in 0.0f64..2.0 * PI, angle in 0.0f64..2.0 * PI,
        dt in 0.0f64..PI, dp in 0.0f64..2.0 * PI,
        bx in -0.3f64..0.3, by in -0.3f64..0.3, bz in -0.3f64..0.3,
        x in 0.1f64..30.0, epsilon in 0.0f64..0.01,
    ) {
        let n = unit(theta, phi);
        let e_d = unit(dt, dp);
        let beta = Vector3::new(bx, by, bz);
        let model = CouplingModel::FULL_ROENTGEN;
        let base = polarization_basis(n, None).unwrap();
        let a = polarization_sum_in_basis(model, &beta, x, &base, &e_d, epsilon);
        let b = polarization_sum_in_basis(model, &beta, x, &rotate_basis(&base, angle), &e_d, epsilon);
        let closed = polarization_sum(model, &beta, x, &n, &e_d, epsilon);
        let scale = 1.0 + closed.abs();
        prop_assert!((a - b).abs() <= 1e-12 * scale);
        prop_assert!((a - closed).abs() <= 1e-12 * scale);
    }

    #[test]
    fn perpendicular_engine_matches_closed_form(
        phi in 0.0f64..2.0 * PI, x in 0.05f64..20.0, delta in -0.3f64..0.3,
        epsilon in 1e-6f64..1e-2, gamma in 1e-6f64..1e-1, side in -0.3f64..0.3,
    ) {
        let e_d = UnitVector3::z_axis();
        let n = unit(PI / 2.0, phi);
        let t = n.as_vector().cross(e_d.as_vector());
        let beta = delta * n.as_vector() + side * t;
        let p = DimensionlessParams::new(epsilon, gamma).unwrap();
        let closed = closed_form_kernel(x, delta, &p).unwrap();
        let general = spectral_kernel(CouplingModel::FULL_ROENTGEN, x, &n, &beta, &p, &e_d).unwrap().value;
        let fast = perpendicular_kernel(CouplingModel::FULL_ROENTGEN, x, delta, &p).unwrap();
        prop_assert!((general - closed).abs() <= 1e-12 * closed);
        prop_assert!((fast - closed).abs() <= 1e-12 * closed);
    }

    #[test]
    fn projection_matches_node_moments(
        mx in -0.1f64..0.1, my in -0.1f64..0.1, mz in -0.1f64..0.1,
        a in 1e-4f64..1e-2, b in 1e-4f64..1e-2, c in 1e-4f64..1e-2, r in -0.5f64..0.5,
        theta in 0.0f64..PI, phi in 0.0f64..2.0 * PI,
    ) {
        let off = r * a * b;
        let cov = Matrix3::new(a * a, off, 0.0, off, b * b, 0.0, 0.0, 0.0, c * c);
        let dist = MomentumDistribution::gaussian(Vector3::new(mx, my, mz), cov).unwrap();
        let n = unit(theta, phi);
        let ProjectedDistribution::Gaussian { mean, variance } = project(&dist, &n).unwrap() else {
            panic!("gaussian projects to a gaussian");
        };
        let m1 = expectation(&dist, |beta| n.dot(beta), 6).unwrap().value;
        let m2 = expectation(&dist, |beta| (n.dot(beta) - mean).powi(2), 6).unwrap().value;
        prop_assert!((m1 - mean).abs() <= 1e-14);
        prop_assert!((m2 - variance).abs() <= 1e-10 * variance);
    }

    #[test]
    fn resonance_roots_back_substitute(delta in -0.9f64..0.9, epsilon in 0.0f64..1.0) {
        let root = resonance_frequency(delta, epsilon).unwrap();
        prop_assert!(root.x_star > 0.0);
        prop_assert!(root.residual.abs() < 1e-12);
    }

    #[test]
    fn resonance_root_is_continuous_in_recoil(delta in -0.1f64..0.1, epsilon in 0.0f64..1e-3) {
        let b = 1.0 - delta;
        let x = resonance_frequency(delta, epsilon).unwrap().x_star;
        prop_assert!((x - 1.0 / b).abs() <= epsilon / b.powi(3) + 1e-15);
    }

    #[test]
    fn rate_variants_agree_without_recoil(
        theta in 0.05f64..3.1, phi in 0.0f64..2.0 * PI, bx in -0.2f64..0.2, by in -0.2f64..0.2, bz in -0.2f64..0.2,
    ) {
        let p = DimensionlessParams::new(0.0, 1e-3).unwrap();
        let n = unit(theta, phi);
        let e_d = UnitVector3::z_axis();
        let beta = Vector3::new(bx, by, bz);
        let f = golden_rule_rate(RateVariant::F, &beta, &n, &e_d, &p, CouplingModel::FULL_ROENTGEN).unwrap();
        let fp = golden_rule_rate(RateVariant::FPrime, &beta, &n, &e_d, &p, CouplingModel::FULL_ROENTGEN).unwrap();
        prop_assert_eq!(f.value, fp.value);
    }

    #[test]
    fn perpendicular_rate_closed_form(phi in 0.0f64..2.0 * PI, delta in -0.3f64..0.3, epsilon in 0.0f64..0.1) {
        let p = DimensionlessParams::new(epsilon, 1e-3).unwrap();
        let e_d = UnitVector3::z_axis();
        let n = unit(PI / 2.0, phi);
        let beta = delta * n.as_vector();
        let r = golden_rule_rate(RateVariant::FPrime, &beta, &n, &e_d, &p, CouplingModel::FULL_ROENTGEN).unwrap();
        let x = r.x_star;
        let b = 1.0 - delta;
        let expected = x.powi(3) * (b - epsilon * x).powi(2) / (b + 2.0 * epsilon * x);
        prop_assert!((r.value - expected).abs() <= 1e-12 * expected);
    }
}
