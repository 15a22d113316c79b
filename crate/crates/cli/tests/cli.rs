//! End-to-end tests of the command-line interface: exit codes, file
//! outputs, and run-to-run determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sectorcap"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn sphere_config(p: f64, max_iter: Option<usize>) -> String {
    let solver = match max_iter {
        Some(m) => format!("{{ \"p\": {p}, \"max_iter\": {m} }}"),
        None => format!("{{ \"p\": {p} }}"),
    };
    format!(
        r#"{{
  "cone": {{ "dim": 3, "half_angle": 1.5707963267948966 }},
  "sigma": {{ "type": "sphere", "radius": 1.0 }},
  "mesh": {{ "n_rho": 32, "n_theta": 8, "grading": "geometric" }},
  "truncation": {{ "radii": [6.0, 12.0, 24.0] }},
  "solver": {solver}
}}"#
    )
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn verify_sphere_passes_and_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cfg.json", &sphere_config(2.0, None));
    let out = tmp.path().join("out");
    let res = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(
        res.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"pass\": true"));
    assert!(report.contains("extrapolated_capacity"));
    for f in ["sigma_profile.csv", "ray_profile.csv", "pfunction.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cfg.json", &sphere_config(1.5, None));
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let res = run(&[
            "solve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--deterministic",
            "--quiet",
        ]);
        assert!(res.status.success());
        outputs.push(out);
    }
    for f in ["report.json", "sigma_profile.csv", "ray_profile.csv", "pfunction.csv"] {
        let a = std::fs::read(outputs[0].join(f)).unwrap();
        let b = std::fs::read(outputs[1].join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
}

#[test]
fn nonconvex_cone_is_rejected_with_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let body = sphere_config(2.0, None).replace("1.5707963267948966", "2.0");
    let cfg = write_config(tmp.path(), "cfg.json", &body);
    let res = run(&["verify", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("convexity"), "stderr: {err}");
}

#[test]
fn starved_solver_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cfg.json", &sphere_config(1.5, Some(1)));
    let out = tmp.path().join("out");
    let res = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn empty_truncation_radii_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let body = sphere_config(2.0, None).replace("[6.0, 12.0, 24.0]", "[]");
    let cfg = write_config(tmp.path(), "cfg.json", &body);
    let res = run(&["study", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let body = sphere_config(2.0, None).replace("\"mesh\"", "\"mhes\"");
    let cfg = write_config(tmp.path(), "cfg.json", &body);
    let res = run(&["solve", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn geometry_command_reports_deficits() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cfg.json", &sphere_config(2.0, None));
    let out = tmp.path().join("out");
    let res = run(&[
        "geometry",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(res.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("geometry.json")).unwrap()).unwrap();
    let area = doc["sigma_area"].as_f64().unwrap();
    assert!((area - 2.0 * std::f64::consts::PI).abs() < 1e-9);
    assert!(doc["isoperimetric_deficit"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn model_command_prints_closed_forms() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "cfg.json", &sphere_config(2.0, None));
    let out = tmp.path().join("out");
    let res = run(&[
        "model",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(res.status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    assert!((doc["capacity"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(doc["decay_exponent"].as_f64().unwrap(), 1.0);

    // Non-sphere curves have no closed form.
    let body = sphere_config(2.0, None).replace(
        r#"{ "type": "sphere", "radius": 1.0 }"#,
        r#"{ "type": "cosine", "radius": 1.0, "deltas": [0.05] }"#,
    );
    let cfg2 = write_config(tmp.path(), "cfg2.json", &body);
    let res = run(&["model", "--config", cfg2.to_str().unwrap(), "--quiet"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn verify_perturbed_cap_still_passes_solver_audits() {
    let tmp = tempfile::tempdir().unwrap();
    let body = sphere_config(2.0, None).replace(
        r#"{ "type": "sphere", "radius": 1.0 }"#,
        r#"{ "type": "cosine", "radius": 1.0, "deltas": [0.0, 0.08] }"#,
    );
    let cfg = write_config(tmp.path(), "cfg.json", &body);
    let out = tmp.path().join("out");
    let res = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(
        res.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    // Solver audits pass, but the overdetermined deviation is visible.
    assert_eq!(doc["report"]["pass"], serde_json::Value::Bool(true));
    assert!(doc["report"]["deviation"]["relative_std"].as_f64().unwrap() > 1e-3);
}
