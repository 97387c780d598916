use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bayes-bench"));
    c.env_remove("BAYES_BENCH_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn toy(dir: &Path) -> String {
    let p = dir.join("toy.csv");
    std::fs::write(&p, "x,label\n0.0,a\n1.0,a\n0.5,b\n2.0,b\n").unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn estimate_reports_contract_fields() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(&["estimate", "--input", &toy(dir.path()), "--label-col", "label", "--method", "ensemble"]));
    let e = v["estimate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&e));
    for key in ["schema_version", "config", "method", "priors", "L", "alpha", "clip_lo", "clamped_fraction", "label_map"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["label_map"]["a"], 1);
    assert_eq!(v["label_map"]["b"], 2);
}

#[test]
fn estimate_base_hand_trace() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(&[
        "estimate", "--input", &toy(dir.path()), "--method", "base", "--epsilon", "0.6", "--clip-lo", "0.01",
    ]));
    assert!((v["estimate"].as_f64().unwrap() - 0.2525).abs() < 1e-12);
    assert_eq!(v["method"], "base");
}

#[test]
fn missing_label_column_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["estimate", "--input", &toy(dir.path()), "--label-col", "class"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("class"));
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = run(&["estimate", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_knobs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy(dir.path());
    for bad in [["--alpha", "-1"], ["--clip-lo", "0"], ["--L", "0"], ["--scheme", "cubic"]] {
        let mut args = vec!["estimate", "--input", &input];
        args.extend(bad);
        assert_eq!(run(&args).status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn weights_chebyshev_hand_values() {
    let v = json(&run(&["weights", "--L", "2", "--d", "1", "--alpha", "1", "--scheme", "chebyshev"]));
    let w: Vec<f64> = v["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((w[0] + 0.207107).abs() < 1e-6 && (w[1] - 1.207107).abs() < 1e-6);
    assert!(v["constraint_residuals"][0].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn weights_uniform_and_residuals() {
    let v = json(&run(&["weights", "--L", "4", "--d", "2", "--scheme", "uniform"]));
    assert!(v["weights"].as_array().unwrap().iter().all(|x| x.as_f64() == Some(0.25)));
    for d in [3, 10] {
        let l = (d + 1).to_string();
        let d = d.to_string();
        let v = json(&run(&["weights", "--L", &l, "--d", &d]));
        assert!(v["constraint_residuals"].as_array().unwrap().iter().all(|r| r.as_f64().unwrap().abs() <= 1e-6));
    }
}

#[test]
fn weights_l_not_above_d_exit_2() {
    assert_eq!(run(&["weights", "--L", "3", "--d", "3"]).status.code(), Some(2));
}

#[test]
fn befs_trace_and_bad_r() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    let out = run(&[
        "simulate", "--family", "gaussian-shift", "--d", "3", "--delta", "3", "--n", "200", "--seed", "1",
        "--output", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v = json(&run(&["befs", "--input", csv.to_str().unwrap(), "--r", "3"]));
    let mut sel: Vec<u64> = v["selected"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    assert_eq!(sel[0], 0);
    assert_eq!(v["ber_curve"].as_array().unwrap().len(), 3);
    assert!(v.get("label_map").is_some());
    sel.sort();
    assert_eq!(sel, vec![0, 1, 2]);
    assert_eq!(run(&["befs", "--input", csv.to_str().unwrap(), "--r", "0"]).status.code(), Some(2));
    assert_eq!(run(&["befs", "--input", csv.to_str().unwrap(), "--r", "4"]).status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        let out = run(&[
            "simulate", "--family", "gaussian-shift", "--d", "10", "--delta", "5", "--n", "1000", "--seed", "7",
            "--output", p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 2001);
}

#[test]
fn sweep_writes_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let summary = dir.path().join("sweep.json");
    let out = run(&[
        "sweep", "--d", "2", "--delta", "2", "--sizes", "30,60", "--trials", "2", "--schemes", "uniform,chebyshev",
        "--output", csv.to_str().unwrap(), "--summary", summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("scheme,alpha,N,trial,estimate,oracle"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
    let s: Value = serde_json::from_slice(&std::fs::read(&summary).unwrap()).unwrap();
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn clt_reports_ks() {
    let v = json(&run(&["clt", "--d", "2", "--delta", "2", "--n", "100", "--trials", "200"]));
    assert!(v["ks_statistic"].as_f64().is_some());
    assert!(v["pass"].is_boolean());
    assert_eq!(run(&["clt", "--trials", "10"]).status.code(), Some(2));
}

#[test]
fn bounds_rows_ascend() {
    let v = json(&run(&["bounds", "--d", "2", "--delta", "2", "--sizes", "50,100", "--trials", "3"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["N"], 50);
    assert_eq!(rows[1]["N"], 100);
    for r in rows {
        assert!(r["hp_lower"].as_f64().unwrap() <= r["hp_upper"].as_f64().unwrap());
    }
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"method": "base", "epsilon": 0.6, "clip_lo": 0.5}"#).unwrap();
    let v = json(&run(&["estimate", "--config", cfg.to_str().unwrap(), "--input", &input, "--clip-lo", "0.01"]));
    assert_eq!(v["config"]["estimator"]["method"], "base");
    assert_eq!(v["config"]["estimator"]["clip_lo"], 0.01);
    assert!((v["estimate"].as_f64().unwrap() - 0.2525).abs() < 1e-12);
}

#[test]
fn threads_from_environment() {
    let out = bin().env("BAYES_BENCH_THREADS", "0").args(["weights", "--L", "2", "--d", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().env("BAYES_BENCH_THREADS", "2").args(["weights", "--L", "2", "--d", "1"]).output().unwrap();
    assert!(out.status.success());
}

#[test]
fn failed_run_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.json");
    let missing = dir.path().join("nope.csv");
    let out = run(&["estimate", "--input", missing.to_str().unwrap(), "--output", target.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!target.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}
