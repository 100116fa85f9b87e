use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use roentgen_core::cli::manifest::sha256_hex;
use roentgen_core::units::{to_dimensionless, Mass, PhysicalInput};

fn roentgen(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roentgen"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

const REST_ATOM: &str = r#"
[dimensionless]
epsilon = 0.0
gamma_tilde = 0.001

[coupling]
model = "standard"

[grid]
x_min = 0.99
x_max = 1.01
points = 201
"#;

#[test]
fn rest_atom_spectrum_peaks_at_the_transition() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("rest.toml");
    std::fs::write(&config, REST_ATOM).unwrap();
    let out = dir.path().join("out");
    let result = roentgen(&["spectrum"], &config, &out);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));

    let mut reader = csv::Reader::from_path(out.join("spectrum.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["x", "w", "error"]);
    let rows: Vec<(f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 201);
    let peak = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!((peak.0 - 1.0).abs() <= 1e-4 + 1e-12);

    let manifest = read_json(&out.join("manifest.json"));
    let bytes = std::fs::read(out.join("spectrum.csv")).unwrap();
    assert_eq!(manifest["outputs"]["spectrum.csv"], Value::String(sha256_hex(&bytes)));
    assert_eq!(manifest["subcommand"], "spectrum");
}

#[test]
fn physical_input_is_echoed_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("hydrogen.json");
    std::fs::write(
        &config,
        r#"{
  "physical": {"mass": {"finite": 1.6735575e-27}, "omega0": 1.5497e16, "gamma0": 6.265e8, "dipole_moment": null},
  "pattern": {"theta_points": 5}
}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let result = roentgen(&["pattern"], &config, &out);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let manifest = read_json(&out.join("manifest.json"));
    let expected = to_dimensionless(&PhysicalInput {
        mass: Mass::Finite(1.6735575e-27),
        omega0: 1.5497e16,
        gamma0: 6.265e8,
        dipole_moment: None,
    })
    .unwrap();
    assert_eq!(manifest["parameters"]["epsilon"].as_f64().unwrap(), expected.epsilon);
    assert_eq!(manifest["parameters"]["gamma_tilde"].as_f64().unwrap(), expected.gamma_tilde);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[dimensionless]\nepsilon = -1.0\ngamma_tilde = 0.001\n").unwrap();
    let result = roentgen(&["spectrum"], &config, &dir.path().join("out"));
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("epsilon"));

    let missing = roentgen(&["rates"], &dir.path().join("absent.toml"), &dir.path().join("out"));
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn unregularized_pattern_is_rejected_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bare.toml");
    std::fs::write(
        &config,
        "[dimensionless]\nepsilon = 0.01\ngamma_tilde = 0.001\n[pattern]\nmode = \"formfactor\"\n[probability]\nupper = 100.0\n",
    )
    .unwrap();
    let result = roentgen(&["pattern"], &config, &dir.path().join("out"));
    assert_eq!(result.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&result.stderr).contains("formfactor"));
}

#[test]
fn divergence_report_states_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("divergence.toml");
    std::fs::write(&config, "[dimensionless]\nepsilon = 0.01\ngamma_tilde = 0.001\n").unwrap();
    let out = dir.path().join("out");
    let result = roentgen(&["divergence"], &config, &out);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let report = read_json(&out.join("divergence.json"));
    let text = report["verdict"]["text"].as_str().unwrap();
    assert!(text.starts_with("roentgen: power(2.00) vs standard: logarithmic"), "{text}");
    for label in ["roentgen", "standard", "roentgen_no_recoil"] {
        assert!(out.join(format!("scan_{label}.csv")).exists());
    }
}

#[test]
fn formfactor_probability_is_finite_and_converged() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("ff.toml");
    std::fs::write(
        &config,
        "[dimensionless]\nepsilon = 0.01\ngamma_tilde = 0.001\n[formfactor]\nkind = \"exponential\"\ncutoff = 20.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let result = roentgen(&["probability", "--tol", "1e-9"], &config, &out);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let report = read_json(&out.join("probability.json"));
    assert_eq!(report["upper"].as_f64().unwrap(), 200.0);
    assert!(report["result"]["converged"].as_bool().unwrap());
    assert!(report["result"]["value"].as_f64().unwrap() > 0.0);
}
