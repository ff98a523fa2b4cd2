use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn topoflow(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_topoflow"));
    cmd.arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.args(args).output().unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bulk_writes_bands_and_chern_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let o = topoflow(dir.path(), Some(r#"{"chern_grid": 50, "band_grid": 5}"#), &["bulk"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(dir.path(), "chern.json"), serde_json::json!({"minus": -2, "zero": 0, "plus": 2}));
    let bands = std::fs::read_to_string(dir.path().join("out/bands.csv")).unwrap();
    let lines: Vec<&str> = bands.lines().collect();
    assert_eq!(lines[0], "kx,ky,omega_minus,omega_zero,omega_plus");
    assert_eq!(lines.len(), 26);
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(&first[..2], &[-4.0, -4.0]);
    let w = (32.0f64 + (1.0 - 0.2 * 32.0f64).powi(2)).sqrt();
    assert!((first[4] - w).abs() < 1e-14 && first[2] == -first[4] && first[3] == 0.0);
}

#[test]
fn invalid_parameters_exit_with_code_2() {
    for (cfg, needle) in [
        (r#"{"f": 1.3, "nu": 0.2}"#, "1 - 4 f nu"),
        (r#"{"f": -1.0}"#, "f"),
        (r#"{"chern_grid": 10}"#, "chern_grid"),
        (r#"{"loops": []}"#, ""),
        (r#"{"bogus": 1}"#, "bogus"),
        (r#"{"levels": [1.5]}"#, "gap"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let cmd = if cfg.contains("loops") { "edge-spectrum" } else { "bulk" };
        let o = topoflow(dir.path(), Some(cfg), &[cmd]);
        assert_eq!(o.status.code(), Some(2), "{cfg}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{cfg}: {}", stderr(&o));
        assert!(!dir.path().join("out").exists() || std::fs::read_dir(dir.path().join("out")).unwrap().count() == 0);
    }
}

#[test]
fn perturbation_needs_the_fd_backend() {
    let dir = tempfile::tempdir().unwrap();
    let o = topoflow(dir.path(), Some(r#"{"perturbation": 0.1}"#), &["spectral-flow", "--backend", "semi"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn spectral_flow_of_fixed_kx_loops() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"loops": [
        {"kind": "fixed_kx", "kx": 1.0},
        {"kind": "fixed_kx", "kx": -1.0},
        {"kind": "around_puncture", "kx_radius": 0.5, "a_radius": 2.0},
        {"kind": "reversed", "of": {"kind": "around_puncture", "kx_radius": 0.5, "a_radius": 2.0}}
    ], "samples": 128}"#;
    let o = topoflow(dir.path(), Some(cfg), &["spectral-flow"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let values: Vec<i64> =
        json(dir.path(), "flow.json").as_array().unwrap().iter().map(|r| r["value"].as_i64().unwrap()).collect();
    assert_eq!(values, [-1, 1, -2, 2]);
}

#[test]
fn edge_spectrum_backends_share_the_schema() {
    let mut summaries = Vec::new();
    for backend in ["semi", "fd"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = r#"{"loops": [{"kind": "circle", "radius": 1.0}], "samples": 64, "fd": {"length": 20.0, "n": 2000}}"#;
        let o = topoflow(dir.path(), Some(cfg), &["edge-spectrum", "--backend", backend]);
        assert!(o.status.success(), "{backend}: {}", stderr(&o));
        let header = |name: &str| {
            std::fs::read_to_string(dir.path().join("out").join(name)).unwrap().lines().next().unwrap().to_owned()
        };
        assert_eq!(header("branches_0.csv"), "gap,branch,theta,omega,start,end");
        assert_eq!(header("ess_edges_0.csv"), "theta,omega_plus_edge,omega_minus_edge");
        let s = json(dir.path(), "edge_spectrum.json");
        let counts: Vec<i64> =
            s[0]["crossings"].as_array().unwrap().iter().map(|c| c["value"].as_i64().unwrap()).collect();
        assert_eq!(counts, [2, 2, 2], "{backend}");
        summaries.push(s[0].as_object().unwrap().keys().cloned().collect::<Vec<_>>());
    }
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn scattering_output_is_deterministic() {
    let cfg = r#"{"scatter_loops": [{"kind": "c_r", "r": 2.0, "eps": 0.05}, {"kind": "square_l"}], "scatter_samples": 64}"#;
    let mut runs = Vec::new();
    for workers in ["1", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let o = topoflow(dir.path(), Some(cfg), &["scattering", "--workers", workers]);
        assert!(o.status.success(), "{}", stderr(&o));
        let read = |n: &str| std::fs::read(dir.path().join("out").join(n)).unwrap();
        runs.push((read("scatter_0.csv"), read("scatter_1.csv"), read("winding.json")));
    }
    assert_eq!(runs[0], runs[1]);
    let w: Value = serde_json::from_slice(&runs[0].2).unwrap();
    assert_eq!(w[0]["value"], 2);
    assert_eq!(w[1]["value"], 0);
}

#[test]
fn robin_demo_pumps_one_state() {
    let dir = tempfile::tempdir().unwrap();
    let o = topoflow(dir.path(), Some(r#"{"robin": {"a_values": [1.0, 2.0]}}"#), &["robin-demo"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(dir.path(), "robin.json");
    for level in r.as_array().unwrap() {
        assert_eq!(level["flow"], -1);
        assert_eq!(level["flow_reversed"], 1);
    }
    let csv = std::fs::read_to_string(dir.path().join("out/robin.csv")).unwrap();
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((row[1] + 1.0).abs() < 1e-3);
}
