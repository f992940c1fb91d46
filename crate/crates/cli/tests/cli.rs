use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn lhvkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lhvkit")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = lhvkit(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn code(args: &[&str]) -> i32 {
    lhvkit(args).status.code().expect("exit code")
}

const PI_4: &str = "0.7853981633974483";

#[test]
fn chsh_psi1_aspect_is_tsirelson() {
    let r = json(&["eval", "--inequality", "chsh", "--state", "psi1", "--theta", PI_4, "--convention", "aspect"]);
    let v = r["value"].as_f64().unwrap();
    assert!((v.abs() - 8f64.sqrt()).abs() < 1e-12);
    assert_eq!(r["violated"], true);
    assert_eq!(r["convention"], "aspect");
}

#[test]
fn crosstalk_eberhard_is_minus_half() {
    let r = json(&["eval", "--inequality", "eberhard", "--model", "crosstalk"]);
    assert!((r["value"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    assert_eq!(r["violated"], true);
}

#[test]
fn ch_ng_on_m_prime_vanishes_at_full_efficiency() {
    let r = json(&["eval", "--inequality", "ch-ng", "--model", "m-prime", "--eta", "1"]);
    assert!(r["value"].as_f64().unwrap().abs() < 1e-12);
    let r = json(&["eval", "--inequality", "ch-ng", "--model", "m-prime", "--eta", "0.9"]);
    assert!(r["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["eval", "--inequality", "chsh"]), 2);
    assert_eq!(code(&["eval", "--inequality", "nope", "--theta", "1"]), 2);
    assert_eq!(code(&["eval", "--inequality", "chsh", "--config", "/does/not/exist.json"]), 2);
    assert_eq!(code(&["build-model", "--model", "crosstalk"]), 2);
    assert_eq!(code(&["eval", "--inequality", "ch-gen", "--model", "app-d", "--eta", "0.6", "--theta", "0.5"]), 1);
    assert_eq!(code(&["analyze", "christensen", "--s2b", "3", "--cab", "0", "--capb", "5"]), 1);
    assert_eq!(code(&["eval", "--inequality", "ch-gen", "--model", "app-d", "--eta", "0.4", "--theta", "0.5"]), 0);
}

#[test]
fn malformed_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"state":{"kind":"psi9"},"angles":{"theta":1}}"#).unwrap();
    assert_eq!(code(&["eval", "--inequality", "chsh", "--config", p.to_str().unwrap()]), 2);
    std::fs::write(&p, r#"{"state":{"kind":"psi2"},"angles":{"theta":0.5}}"#).unwrap();
    assert_eq!(code(&["eval", "--inequality", "chsh", "--config", p.to_str().unwrap()]), 0);
}

#[test]
fn model_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&["build-model", "--model", "m", "--beta", "2.6", "--out", d]), 0);
    let model = dir.path().join("model.csv");
    let from_file = json(&["eval", "--inequality", "chsh", "--ensemble", model.to_str().unwrap()]);
    assert!((from_file["value"].as_f64().unwrap() - 2.6).abs() < 1e-12);
}

#[test]
fn exact_counts_agree_with_model_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&["synth-counts", "--model", "m-prime", "--beta", "2.5", "--trials", "1000000", "--out", d]), 0);
    let counts = dir.path().join("counts.csv");
    let from_counts = json(&["eval", "--inequality", "ch-op", "--counts", counts.to_str().unwrap()]);
    let direct = json(&["eval", "--inequality", "ch-op", "--model", "m-prime", "--beta", "2.5"]);
    let (a, b) = (from_counts["value"].as_f64().unwrap(), direct["value"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-5, "{a} vs {b}");
}

#[test]
fn eta_crit_matches_header_example() {
    let r = json(&["eta-crit", "--state", "psi1", "--theta", "0.4"]);
    assert!((r["etaCrit"].as_f64().unwrap() - 0.90).abs() <= 0.01 + 1e-12);
}

#[test]
fn sweep_writes_trace_rows() {
    let out = lhvkit(&["sweep", "--state", "psi2", "--thetas", "0.5,0.9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,eta,mu,feasible,etaCrit"));
    assert!(lines.all(|l| l.split(',').count() == 5));
}

#[test]
fn gamma_recovers_rates_from_a_synthetic_record() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let scen = ["--state", "giustina:3", "--giustina-angles", "--permute", "labels"];
    let mut synth = vec!["synth-counts", "--record", "--eta-a", "0.7", "--eta-b", "0.72", "--trials", "10000000", "--out", d];
    synth.extend(scen);
    assert_eq!(code(&synth), 0);
    let rec = dir.path().join("record.csv");
    let mut args = vec!["analyze", "gamma", "--record", rec.to_str().unwrap(), "--eta-window", "0.68,0.73"];
    args.extend(scen);
    let r = json(&args);
    assert!((r["etaA"].as_f64().unwrap() - 0.7).abs() < 1e-3);
    assert!((r["etaB"].as_f64().unwrap() - 0.72).abs() < 1e-3);
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reproduce_is_byte_identical() {
    for fig in ["fig2", "fig5", "tableII"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(code(&["reproduce", fig, "--out", a.path().to_str().unwrap()]), 0);
        assert_eq!(code(&["reproduce", fig, "--out", b.path().to_str().unwrap()]), 0);
        let (x, y) = (read_dir_sorted(a.path()), read_dir_sorted(b.path()));
        assert!(!x.is_empty());
        assert_eq!(x, y, "{fig}");
    }
}

#[test]
fn reproduce_fig2_signs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["reproduce", "fig2", "--out", dir.path().to_str().unwrap()]), 0);
    let text = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 20);
    for r in &rows {
        assert!(r[1] <= 1e-12 && r[3] <= 1e-12, "genuine CH above 0 at eta {}", r[0]);
        assert!(r[2] >= 0.0 && r[4] >= 0.0, "non-genuine CH below 0 at eta {}", r[0]);
    }
    let last = rows.last().unwrap();
    assert_eq!(last[0], 1.0);
    assert!(last[2].abs() < 1e-12);
}

#[test]
fn reproduce_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["reproduce", "tableI", "--out", dir.path().to_str().unwrap()]), 0);
    let weights = std::fs::read_to_string(dir.path().join("tableI.csv")).unwrap();
    let lines: Vec<&str> = weights.lines().collect();
    assert_eq!(lines.len(), 42);
    assert!(lines.iter().all(|l| l.split(',').count() == 17));
    let cols = std::fs::read_to_string(dir.path().join("tableI_columns.csv")).unwrap();
    for l in cols.lines().skip(1) {
        let mu: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert!(mu < 5e-5);
    }
    let prov: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("tableI_provenance.json")).unwrap()).unwrap();
    assert!(prov.get("wallTimeSeconds").is_none());
}
