use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ncp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn grid_csv_layout_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid.csv");
    let o = ncp(&[
        "ncp-grid",
        "--model",
        "spin_bath",
        "--params",
        "N=1",
        "--t1",
        "0:1:3",
        "--dt",
        "0.1:1:4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t1,dt,ncp,flag");
    assert_eq!(lines.len(), 1 + 12);
    assert!(!text.contains('\r'));
    // t₁-major order.
    assert!(lines[1].starts_with("0.000000000000000e0,1.000000000000000e-1,"));
    assert!(lines[5].starts_with("5.000000000000000e-1,1.000000000000000e-1,"));
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 4);
        let v: f64 = f[2].parse().unwrap();
        assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&v));
        assert_eq!(f[3], "ok");
    }

    let m = read_json(&dir.path().join("grid.csv.manifest.json"));
    assert_eq!(m["command"], "ncp-grid");
    assert_eq!(m["time_unit"], "1/A");
    assert_eq!(m["details"]["shape"], serde_json::json!([3, 4]));
    assert!(m["stats"]["steps"].as_u64().unwrap() > 0);
}

#[test]
fn grid_output_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str, name: &str| {
        let out = dir.path().join(name);
        let o = ncp(&[
            "ncp-grid",
            "--model",
            "damped_jc",
            "--params",
            "R=5",
            "--t1",
            "0:3:7",
            "--dt",
            "0.2:4:5",
            "--jobs",
            jobs,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1", "a.csv"), run("3", "b.csv"));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    std::fs::write(&model, r#"{"model": "spin_bath", "params": {"N": 2}}"#).unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"model": "model.json", "t1": "0:1:2", "dt": {"start": 0.5, "end": 1, "n": 2}, "format": "json"}"#,
    )
    .unwrap();
    let o = ncp(&["ncp-grid", "--config", cfg.to_str().unwrap(), "--params", "N=1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["model"]["params"]["n_spins"], 1.0);
    assert_eq!(v["t1_axis"], serde_json::json!([0.0, 1.0]));
    assert_eq!(v["values"].as_array().unwrap().len(), 4);
}

#[test]
fn custom_model_grid() {
    // Constant-rate amplitude damping is Markovian: Ncp vanishes everywhere.
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("custom.json");
    std::fs::write(
        &model,
        r#"{"model": "custom", "dim": 2,
            "channels": [{"label": "decay", "operator": [[[0,0],[1,0]],[[0,0],[0,0]]], "rate": 0.5}]}"#,
    )
    .unwrap();
    let o = ncp(&[
        "ncp-grid",
        "--model",
        model.to_str().unwrap(),
        "--t1",
        "0:2:3",
        "--dt",
        "0.5:2:3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    for l in text.lines().skip(1) {
        assert!(l.ends_with(",0.000000000000000e0,ok"), "{l}");
    }
    // NM of a custom model needs an explicit region.
    let o = ncp(&["nm", "--model", model.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = ncp(&[
        "nm",
        "--model",
        model.to_str().unwrap(),
        "--region",
        "0:2:2",
        "--resolution",
        "10",
        "--no-refine",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["estimate"]["nm"], 0.0);
}

#[test]
fn nm_json_with_random_cross_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nm.json");
    let args = [
        "nm",
        "--model",
        "spin_bath",
        "--params",
        "N=1",
        "--resolution",
        "40",
        "--random",
        "200",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ];
    let o = ncp(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out);
    let nm = v["estimate"]["nm"].as_f64().unwrap();
    assert!(nm > 0.45 && nm < 0.56, "{nm}");
    assert!(v["estimate"]["convergence"].as_array().unwrap().len() >= 2);
    let r = v["random"]["nm"].as_f64().unwrap();
    assert!((r - nm).abs() < 0.1, "{r} vs {nm}");
    let m = read_json(&dir.path().join("nm.json.manifest.json"));
    assert_eq!(m["details"]["refinement"], v["estimate"]["convergence"]);
    assert_eq!(m["config"]["seed"], 7);

    let first = std::fs::read(&out).unwrap();
    assert_eq!(code(&ncp(&args)), 0);
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn markovian_nm_is_zero() {
    let o = ncp(&["nm", "--model", "damped_jc", "--params", "R=0.3"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["estimate"]["nm"], 0.0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Markovian"));
}

#[test]
fn sweep_csv() {
    let o = ncp(&[
        "sweep",
        "--model",
        "spin_bath",
        "--param",
        "N",
        "--values",
        "1,2",
        "--resolution",
        "40",
        "--no-refine",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,nm,support_fraction,error");
    assert_eq!(lines.len(), 3);
    let nm: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(nm[1] > nm[0]);
    assert!(lines[1].ends_with(','));
}

#[test]
fn check_passes_and_reports() {
    let o = ncp(&[
        "check",
        "--model",
        "damped_jc",
        "--params",
        "R=5",
        "--grid",
        "10",
        "--times",
        "4",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 6);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn check_failure_exits_one() {
    // A loose integrator cannot meet the oracle tolerances.
    let o = ncp(&[
        "check",
        "--model",
        "damped_jc",
        "--params",
        "R=5",
        "--grid",
        "10",
        "--tol",
        "1e-2",
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL "));
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(code(&ncp(&["nm"])), 2);
    assert_eq!(code(&ncp(&["nm", "--model", "damped_jc", "--params", "bogus=1"])), 2);
    assert_eq!(
        code(&ncp(&[
            "ncp-grid",
            "--model",
            "damped_jc",
            "--params",
            "R=5",
            "--t1",
            "0:1:1"
        ])),
        2
    );
    assert_eq!(
        code(&ncp(&[
            "ncp-grid",
            "--model",
            "damped_jc",
            "--params",
            "R=5",
            "--t1",
            "0:1:3"
        ])),
        2
    );
    assert_eq!(
        code(&ncp(&[
            "sweep",
            "--model",
            "damped_jc",
            "--params",
            "R=5",
            "--param",
            "x",
            "--values",
            "1"
        ])),
        2
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"modle": "damped_jc"}"#).unwrap();
    assert_eq!(code(&ncp(&["nm", "--config", cfg.to_str().unwrap()])), 2);
}
