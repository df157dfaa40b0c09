use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_toric-ale"));
    for (k, _) in std::env::vars() {
        if k.starts_with("TORIC_ALE_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn temp_config(name: &str, text: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("toric-ale-{}-{name}.conf", std::process::id()));
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn classify_contract() {
    let o = run(&["classify", "5", "3", "2", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "yes");
    assert_eq!(v["tree"]["children"]["1"]["weights"], serde_json::json!([3, 1, 2, 1]));
    assert_eq!(run(&["classify", "7", "5", "1", "1"]).status.code(), Some(0));
    assert_eq!(run(&["classify", "4", "2", "1"]).status.code(), Some(2));
    let unknown = run(&["classify", "3", "2", "2", "--set", "node_budget=200"]);
    assert_eq!(unknown.status.code(), Some(3));
    let v: Value = serde_json::from_str(&stdout(&unknown)).unwrap();
    assert_eq!(v["verdict"], "unknown");
    assert_eq!(v["stats"]["budget_exhausted"], true);
}

#[test]
fn verify_examples() {
    let o = run(&["verify", "--a0", "7", "--w", "2", "3", "--checks", "abreu,boundary,positivity"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), 3);
    assert!(v["reports"].as_array().unwrap().iter().all(|r| r["seconds"].is_null()));

    let o = run(&["verify", "--a0", "5", "--w", "2", "3", "--checks", "asymptotics"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(v["reports"][0]["details"]["ricci_flat_fit"], true);

    let o = run(&["verify", "--a0", "5", "--w", "2", "3", "--flat", "--checks", "abreu"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["reports"][0]["tolerance"], 1e-8);
}

#[test]
fn failing_check_exits_one() {
    // An impossible tolerance turns a passing check into a reported failure.
    let o = run(&["verify", "--a0", "7", "--w", "2", "3", "--checks", "abreu", "--set", "abreu_tol=1e-300"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn surface_examples() {
    let v: Value = serde_json::from_str(&stdout(&run(&["surface", "7", "2", "3"]))).unwrap();
    assert_eq!(v["lambda_a"], "294");
    assert_eq!(v["normal_scale"], "1/294");
    let v: Value = serde_json::from_str(&stdout(&run(&["surface", "5", "1", "1"]))).unwrap();
    assert_eq!(v["structure"]["kind"], "calabi");
    assert_eq!(v["lambda_a"], "1");
    let o = run(&["surface", "5", "2", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let poly = v["reports"].as_array().unwrap().iter().find(|r| r["check"] == "polynomiality").unwrap();
    assert_eq!(poly["pass"], true);
    assert_eq!(run(&["surface", "4", "2", "2"]).status.code(), Some(2));
}

#[test]
fn config_file_env_and_flags() {
    let cfg = temp_config("fmt", "# output as csv\nformat = csv\nseed = 5\n");
    let path = cfg.to_str().unwrap();
    let args = ["verify", "--a0", "5", "--w", "2", "3", "--checks", "vandermonde", "--config", path];

    let csv = stdout(&run(&args));
    assert!(csv.starts_with("check,max_residual"), "{csv}");

    let mut with_flag = args.to_vec();
    with_flag.push("--json");
    let v: Value = serde_json::from_str(&stdout(&run(&with_flag))).unwrap();
    assert_eq!(v["seed"], 5);

    let mut seeded = with_flag.clone();
    seeded.extend(["--seed", "9"]);
    let v: Value = serde_json::from_str(&stdout(&run(&seeded))).unwrap();
    assert_eq!(v["seed"], 9);

    let env = bin().args(&with_flag).env("TORIC_ALE_SEED", "13").output().unwrap();
    let v: Value = serde_json::from_str(&stdout(&env)).unwrap();
    assert_eq!(v["seed"], 13);

    let bad = temp_config("bad", "abreu_tol = -3\n");
    let o = run(&["classify", "5", "3", "2", "1", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("abreu_tol"));
    let _ = std::fs::remove_file(cfg);
    let _ = std::fs::remove_file(bad);
}

#[test]
fn timing_is_opt_in() {
    let o = run(&["verify", "--a0", "5", "--w", "1", "1", "--checks", "positivity", "--timing"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["reports"][0]["seconds"].is_f64());
}

#[test]
fn ray_csv() {
    let o = run(&["ray", "--a0", "7", "--w", "1", "1", "1", "--set", "ray_points=8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("xi_ell,norm_sq,H,H_minus_quarter_norm_sq"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--a0", "5"]).status.code(), Some(2));
}
