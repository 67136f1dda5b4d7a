//! The `trc` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn channel(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("channels").join(name)
}

fn trc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trc")).args(args).output().expect("spawn trc")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn default_sweep_matches_golden_csv() {
    let bsc = channel("bsc01.json");
    let golden = std::fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/bsc01_curve.csv")).unwrap();
    let first = trc(&["curve", "--channel", path_str(&bsc)]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let second = trc(&["curve", "--channel", path_str(&bsc)]);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, golden);
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("curve.csv");
    let bsc = channel("bsc01.json");
    let out = trc(&["curve", "--channel", path_str(&bsc), "--points", "5", "--out", path_str(&target)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let direct = trc(&["curve", "--channel", path_str(&bsc), "--points", "5"]);
    assert_eq!(std::fs::read(&target).unwrap(), direct.stdout);
}

#[test]
fn malformed_channel_files_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("not_json.json", "{ W: nope"),
        ("row_sum.json", r#"{"W": [[0.9, 0.2], [0.1, 0.9]], "beta": 1}"#),
        ("negative.json", r#"{"W": [[1.1, -0.1], [0.1, 0.9]], "beta": 1}"#),
        ("ragged.json", r#"{"W": [[1.0], [0.1, 0.9]], "beta": 1}"#),
        ("bad_p.json", r#"{"W": [[0.9, 0.1], [0.1, 0.9]], "P": [0.7, 0.7], "beta": 1}"#),
        ("bad_beta.json", r#"{"W": [[0.9, 0.1], [0.1, 0.9]], "beta": -1}"#),
        ("unknown_key.json", r#"{"W": [[0.9, 0.1], [0.1, 0.9]], "beta": 1, "gamma": 3}"#),
        ("beta_word.json", r#"{"W": [[0.9, 0.1], [0.1, 0.9]], "beta": "huge"}"#),
        ("empty.json", ""),
    ];
    for (name, text) in cases {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        let out = trc(&["curve", "--channel", path_str(&p), "--points", "2"]);
        assert_eq!(out.status.code(), Some(1), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty(), "{name}");
    }
    let missing = dir.path().join("absent.json");
    assert_eq!(trc(&["dual", "--channel", path_str(&missing), "--rate", "0.1"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(trc(&["curve", "--nonsense"]).status.code(), Some(1));
    assert_eq!(trc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(trc(&[]).status.code(), Some(1));
    let help = trc(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("curve"));
    let bsc = channel("bsc01.json");
    assert_eq!(trc(&["dual", "--channel", path_str(&bsc), "--rate", "-0.1"]).status.code(), Some(1));
}

#[test]
fn zero_rate_dual_reports_half_sigma() {
    let bsc = channel("bsc01.json");
    let out = trc(&["dual", "--channel", path_str(&bsc), "--rate", "0", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!(v["value"].as_f64().unwrap() >= 0.25);
    assert!((v["sigma"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(v["regime_hint"], "low");
}

#[test]
fn bits_flag_rescales_rates_and_exponents() {
    let bsc = channel("bsc01.json");
    let nats = json_of(&trc(&["dual", "--channel", path_str(&bsc), "--rate", "0.1", "--json"]));
    let bits = json_of(&trc(&["--bits", "dual", "--channel", path_str(&bsc), "--rate", "0.1", "--json"]));
    let ln2 = std::f64::consts::LN_2;
    assert_eq!(bits["units"], "bits");
    for key in ["rate", "value", "e_sp"] {
        let (a, b) = (nats[key].as_f64().unwrap(), bits[key].as_f64().unwrap());
        assert!((a / ln2 - b).abs() <= 1e-15, "{key}");
    }
    // Multipliers are dimensionless.
    assert_eq!(nats["sigma"], bits["sigma"]);
}

#[test]
fn primal_refuses_large_alphabets() {
    let quad = channel("quaternary.json");
    let out = trc(&["primal", "--channel", path_str(&quad), "--rate", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn primal_sits_above_dual() {
    let z = channel("z03.json");
    let out = trc(&["primal", "--channel", path_str(&z), "--rate", "0.1", "--grid", "0.1", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let (p, d) = (v["primal"].as_f64().unwrap(), v["dual"].as_f64().unwrap());
    assert!(p >= d - 1e-6, "{p} < {d}");
}

#[test]
fn regimes_needs_a_matched_ml_decoder() {
    let mm = channel("bsc01_mismatched.json");
    assert_eq!(trc(&["regimes", "--channel", path_str(&mm)]).status.code(), Some(1));
    let bsc = channel("bsc01.json");
    let out = trc(&["regimes", "--channel", path_str(&bsc), "--points", "3"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn seeded_simulation_is_reproducible() {
    let bsc = channel("bsc01.json");
    let run = |threads: &str| {
        json_of(&trc(&[
            "simulate", "--channel", path_str(&bsc), "--n", "6", "--rate", "0.1", "--seed", "0", "--threads", threads,
            "--json",
        ]))
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one["estimate"], four["estimate"]);
    assert_eq!(one["stderr"], four["stderr"]);
    // Same configuration as the library's frozen estimate.
    assert_eq!(one["estimate"].as_f64().unwrap(), 0.5248869375626934);
    assert_eq!(one["messages"], 2);
}

#[test]
fn identities_pass() {
    let out = trc(&["identities"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(!text.contains("FAIL"), "{text}");
}
