use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use roentgen_core::amplitudes::{discrete_mode_evolution, DiscreteModeSystem, Mode};

/// Three modes propagated exactly with the matrix exponential of the
/// amplitude equations' generator.
#[test]
fn rk4_matches_matrix_exponential() {
    let modes = vec![
        Mode { energy: -0.08, coupling: 0.03, weight: 1.0 },
        Mode { energy: 0.01, coupling: 0.05, weight: 1.0 },
        Mode { energy: 0.12, coupling: 0.02, weight: 1.0 },
    ];
    let (dt, duration) = (0.01, 40.0);
    let sys = DiscreteModeSystem {
        modes: modes.clone(),
        time_step: dt,
        duration,
        sample_every: 100,
    };
    let evolution = discrete_mode_evolution(&sys).unwrap();

    let n = modes.len() + 1;
    let mut generator = DMatrix::<Complex64>::zeros(n, n);
    for (j, m) in modes.iter().enumerate() {
        generator[(0, j + 1)] = Complex64::new(-m.coupling, 0.0);
        generator[(j + 1, 0)] = Complex64::new(m.coupling, 0.0);
        generator[(j + 1, j + 1)] = Complex64::new(0.0, -m.energy);
    }
    let propagator = (generator * Complex64::new(duration, 0.0)).exp();
    let mut initial = DVector::<Complex64>::zeros(n);
    initial[0] = Complex64::new(1.0, 0.0);
    let exact = propagator * initial;

    let excited = *evolution.excited_population.last().unwrap();
    assert!((excited - exact[0].norm_sqr()).abs() < 1e-10, "{excited} vs {}", exact[0].norm_sqr());
    for (j, p) in evolution.final_mode_populations.iter().enumerate() {
        assert!((p - exact[j + 1].norm_sqr()).abs() < 1e-10);
    }
    assert!(evolution.max_norm_drift < 1e-10);
}

#[test]
fn decoupled_atom_stays_excited() {
    let sys = DiscreteModeSystem::flat_band(50, 1e-3, 0.0, 0.5, 100.0);
    let evolution = discrete_mode_evolution(&sys).unwrap();
    assert!(evolution.excited_population.iter().all(|&p| p == 1.0));
}
