use std::path::Path;
use std::process::{Command, Output};

use forge_cli::manifest::{sha256_hex, Manifest, Status};
use forge_core::ReluNet;

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forge")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SMALL: &str = r#"{
  "seed": 9,
  "prg": { "m": 12, "d": 24 },
  "certify": { "kind": "prg-support" },
  "attack": {
    "method": "mlp",
    "depths": [1, 2],
    "train": { "width": 16, "steps": 60, "eval_every": 20, "eval_samples": 500, "final_eval_samples": 1000 }
  },
  "hardness": { "m": 6, "d": 12 }
}"#;

fn run_config(dir: &Path, text: &str) -> Output {
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join("out");
    forge(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn dry_run_of_bundled_config_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig");
    let o = forge(&["run", "--bundled", "figure1", "--dry-run", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    for k in 1..=4 {
        assert!(text.contains(&format!("loss_curve_depth{k}.csv")));
    }
    assert!(!out.exists());
}

#[test]
fn invalid_config_is_a_user_error_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(tmp.path(), "{\n  \"seed\": 1,\n  \"prg\": { \"m\": 12, \"d\": 24, \"stretch\": 2 }\n}");
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    let o = run_config(tmp.path(), r#"{"seed": 1, "attack": {"method": "mlp"}}"#);
    assert_eq!(code(&o), 1, "attack without a prg section");
}

#[test]
fn reruns_are_byte_identical_and_manifest_hashes_match() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for t in [&a, &b] {
        let o = run_config(t.path(), SMALL);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ma = Manifest::read(&a.path().join("out")).unwrap();
    assert_eq!(ma.status, Status::Ok);
    assert_eq!(ma.stages.len(), 4);
    for f in ma.stages.iter().flat_map(|s| &s.outputs) {
        let x = std::fs::read(a.path().join("out").join(&f.path)).unwrap();
        let y = std::fs::read(b.path().join("out").join(&f.path)).unwrap();
        assert_eq!(x, y, "{}", f.path);
        assert_eq!(sha256_hex(&x), f.sha256);
    }
    let mb = std::fs::read(b.path().join("out/manifest.json")).unwrap();
    assert_eq!(std::fs::read(a.path().join("out/manifest.json")).unwrap(), mb);
    // the manifest alone reproduces the run
    let c = tempfile::tempdir().unwrap();
    let o = run_config(c.path(), &serde_json::to_string(&ma.config).unwrap());
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(c.path().join("out/manifest.json")).unwrap(), mb);
    let csv = std::fs::read_to_string(a.path().join("out/loss_curve_depth2.csv")).unwrap();
    assert!(csv.starts_with("step,test_loss,accuracy\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn failing_stage_leaves_failure_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(
        tmp.path(),
        r#"{"seed": 1, "prg": {"m": 8, "d": 16}, "certify": {"kind": "cube", "d": 0, "log2_n": 3}, "hardness": {"m": 6, "d": 10}}"#,
    );
    assert_eq!(code(&o), 1);
    let m = Manifest::read(&tmp.path().join("out")).unwrap();
    assert_eq!(m.status, Status::Failed);
    let st: Vec<_> = m.stages.iter().map(|s| s.status.clone()).collect();
    assert_eq!(st, vec![Status::Ok, Status::Failed, Status::Skipped]);
    assert!(tmp.path().join("out/prg.json").exists());
}

#[test]
fn prg_sample_and_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("prg.json");
    let o = forge(&["prg", "sample", "--m", "10", "--d", "6", "--seed", "3", "--out", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = forge(&["prg", "eval", p.to_str().unwrap(), "--input=++++++++++", "--input=----------"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows, vec!["1.0,1.0,1.0,1.0,1.0,1.0"; 2]);
    let o = forge(&["prg", "eval", p.to_str().unwrap(), "--n", "5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(code(&forge(&["prg", "eval", p.to_str().unwrap(), "--input", "++x"])), 1);
}

#[test]
fn compile_predicate_emits_a_network() {
    let o = forge(&["compile-predicate"]);
    assert_eq!(code(&o), 0);
    let net = ReluNet::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(net.d_in(), 5);
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("c.json");
    std::fs::write(&c, r#"{"n": 2, "gates": [{"inputs": [0, 1], "weights": [1, 1], "bias": 1}], "output": 0}"#)
        .unwrap();
    let o = forge(&["compile-circuit", c.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn certify_and_hardness_subcommands() {
    let o = forge(&["certify", "leaky", "--dims", "20,24,30", "--lambda-leak", "0.25"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["beta"].as_f64().unwrap() > 0.0);
    let o = forge(&["hardness", "check", "--m", "6", "--d", "12", "--seed", "2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["holds"], true);
    assert_eq!(code(&forge(&["hardness", "check", "--m", "21", "--d", "30"])), 1);
}

#[test]
fn scan_attack_and_gen_round_trip() {
    let o = forge(&["attack", "--method", "scan", "--p-plus", "0.8", "--d", "20", "--samples", "5000"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["advantage"].as_f64().unwrap() > 0.5);
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("gen");
    let o = forge(&[
        "gen",
        "build",
        "--m",
        "10",
        "--d",
        "40",
        "--epsilon",
        "0.25",
        "--target-dims",
        "4,6",
        "--out",
        g.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = forge(&["gen", "sample", g.to_str().unwrap(), "--n", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("x5"));
    assert_eq!(code(&forge(&["frobnicate"])), 1);
}
