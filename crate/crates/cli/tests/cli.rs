use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn densilab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_densilab"))
        .args(args)
        .env_remove("DENSILAB_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn write_matrix(dir: &Path, name: &str, rows: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, format!("{{\"dim\": 2, \"rows\": {rows}}}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn analyze_reports() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_matrix(dir.path(), "a.json", "[[2, 0], [0, 4]]");
    let v = json(&densilab(&["analyze", &file]));
    assert_eq!((v["expansive"].as_bool(), v["positive"].as_bool(), v["lattice"].as_bool()), (Some(true), Some(true), Some(true)));

    let v = json(&densilab(&["analyze", "0,2;2,0"]));
    assert_eq!(v["expansive"], true);
    assert_eq!(v["positive"], false);
    assert_eq!(v["eigenvalues"], serde_json::json!([-2.0, 2.0]));

    let v = json(&densilab(&["analyze", "1.5,0;0,3"]));
    assert_eq!(v["lattice"], false);

    let out = densilab(&["analyze", "1,2;0,1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotSymmetric"));
}

#[test]
fn equiv_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = densilab(&["equiv", "2,0;0,4", "4,0;0,16"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["equivalent"], true);
    assert!((v["t"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["mra"]["status"], "EquivalentTrivially");

    let out = densilab(&["equiv", "2,0;0,4", "2,0;0,8"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["equivalent"], false);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 2, \"rows\": [[1, 2]]").unwrap();
    let out = densilab(&["equiv", "2,0;0,4", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ParseError"));

    let out = densilab(&["equiv", "2,0;0,4", "0.5,0;0,4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotExpansive"));
}

#[test]
fn density_exact_columns() {
    let common = ["density", "--matrix", "2,0;0,4", "--set", "ealpha", "--exact", "--samples", "20000", "--format", "csv"];

    let out = densilab(&[&common[..], &["--alpha", "2", "--complement"]].concat());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["j", "ratio", "stderr", "samples", "exact"]);
    assert_eq!(rows.len(), 10);
    for row in &rows[1..] {
        let exact: f64 = row[4].parse().unwrap();
        assert!((exact - 1.0 / 3.0).abs() < 1e-15, "{row:?}");
    }

    let out = densilab(&[&common[..], &["--alpha", "3", "--complement"]].concat());
    for row in &csv_rows(&out)[1..] {
        let j: i32 = row[0].parse().unwrap();
        let exact: f64 = row[4].parse().unwrap();
        assert!((exact - 0.25 * 2f64.powi(-j)).abs() <= 1e-14 * 0.25 * 2f64.powi(-j), "{row:?}");
    }

    // without --complement the column describes E_alpha itself
    let out = densilab(&[&common[..], &["--alpha", "2"]].concat());
    for row in &csv_rows(&out)[1..] {
        let exact: f64 = row[4].parse().unwrap();
        assert!((exact - 2.0 / 3.0).abs() < 1e-15, "{row:?}");
    }

    let out = densilab(&["density", "--matrix", "2,1;1,4", "--set", "ealpha", "--exact", "--samples", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BadParameter"));
}

#[test]
fn density_classifications() {
    let v = json(&densilab(&["density", "--matrix", "2,0;0,4", "--set", "gdelta", "--delta", "1", "--samples", "100000"]));
    assert_eq!(v["classification"], "ConvergesToOne");
    assert_eq!(v["estimates"].as_array().unwrap().len(), 9);

    let v = json(&densilab(&["density", "--matrix", "2,0;0,4", "--set", "ealpha", "--alpha", "1.5", "--samples", "100000"]));
    assert_eq!(v["classification"], "ConvergesToZero");

    let region = r#"{"kind": "ball", "dim": 2, "r": 0.5}"#;
    let out = densilab(&["density", "--matrix", "2,0;0,4", "--region", region, "--samples", "1000", "--j-max", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["set"]["kind"], "ball");
    assert_eq!(v["estimates"][3]["ratio"], 1.0);

    let out = densilab(&["density", "--matrix", "2,0;0,4", "--region", "{\"kind\": \"blob\"}"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_examples() {
    let v = json(&densilab(&["classify", "0,2;1,0"]));
    let c = &v["classification"];
    assert_eq!(c["similarity_class"], "A1");
    assert_eq!((c["root_of_identity"]["l"].as_u64(), c["root_of_identity"]["n"].as_u64()), (Some(2), Some(2)));
    assert_eq!(v["corollary_d"], true);

    let v = json(&densilab(&["classify", "1,1;-1,1"]));
    let c = &v["classification"];
    assert_eq!(c["similarity_class"], "+A3");
    assert_eq!((c["root_of_identity"]["l"].as_u64(), c["root_of_identity"]["n"].as_u64()), (Some(8), Some(16)));

    let v = json(&densilab(&["classify", "2,0;0,2"]));
    assert_eq!(v["dyadic"]["dyadic"], true);

    let out = densilab(&["classify", "1.5,0.5;0.5,1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = densilab(&["classify", "--scan", "2", "--format", "csv"]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["a", "b", "c", "d", "det", "trace", "class", "conjugator_found", "l", "n"]);
    assert!(rows[1..].iter().all(|r| r.len() == 10));
    assert!(rows.iter().any(|r| r[..4] == ["0", "2", "1", "0"] && r[6] == "A1" && r[7] == "true"));
}

#[test]
fn dyadic_examples() {
    let v = json(&densilab(&["dyadic", "2,0;0,2"]));
    assert_eq!(v["dyadic"], true);
    assert_eq!(v["exponent"], 1.0);
    let v = json(&densilab(&["dyadic", "0,3;3,0"]));
    assert_eq!(v["dyadic"], true);
    let v = json(&densilab(&["dyadic", "2,0;0,4"]));
    assert_eq!(v["dyadic"], false);
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["density", "--matrix", "3,1;1,3", "--set", "gdelta", "--samples", "50000", "--seed", "7"];
    let a = densilab(&args);
    let b = densilab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = densilab(&[&args[..6], &["--samples", "50000", "--seed", "8"]].concat());
    assert_ne!(a.stdout, c.stdout);

    let scan = ["classify", "--scan", "3"];
    assert_eq!(densilab(&scan).stdout, densilab(&scan).stdout);
}

#[test]
fn floats_round_trip_through_json() {
    let v = json(&densilab(&["equiv", "2,0;0,4", "2.8284271247461903,0;0,8"]));
    let t = v["t"].as_f64().unwrap();
    assert_eq!(t, 1.5f64);
    let out = densilab(&["analyze", "1.1,0;0,3.3"]);
    let v = json(&out);
    assert_eq!(v["eigenvalues"][0].as_f64(), Some(1.1));
    assert_eq!(v["eigenvalues"][1].as_f64(), Some(3.3));
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("densilab.toml");
    std::fs::write(&cfg, "samples = 2000\nseed = 5\nj_max = 2\nformat = \"csv\"\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let base = ["density", "--matrix", "2,0;0,4", "--set", "ealpha", "--config", cfg];

    let run = |extra: &[&str], seed_env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_densilab"));
        cmd.args(base).args(extra).env_remove("DENSILAB_SEED");
        if let Some(s) = seed_env {
            cmd.env("DENSILAB_SEED", s);
        }
        cmd.output().unwrap()
    };

    let from_file = run(&[], None);
    let rows = csv_rows(&from_file);
    assert_eq!(rows.len(), 4, "j_max from the file");
    assert!(rows[1..].iter().all(|r| r[3] == "2000"));

    let flag = run(&["--seed", "5"], None);
    assert_eq!(flag.stdout, from_file.stdout);
    let env = run(&[], Some("9"));
    assert_ne!(env.stdout, from_file.stdout, "environment seed beats the file");
    assert_eq!(env.stdout, run(&["--seed", "9"], None).stdout);
    assert_eq!(run(&["--seed", "5"], Some("9")).stdout, from_file.stdout, "flag beats the environment");

    let flag_format = run(&["--format", "json", "--samples", "100"], None);
    let v = json(&flag_format);
    assert_eq!(v["estimates"][0]["samples"], 100);

    std::fs::write(dir.path().join("bad.toml"), "sample = 1\n").unwrap();
    let out = densilab(&["analyze", "2,0;0,4", "--config", dir.path().join("bad.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ParseError"));

    let out = densilab(&["density", "--matrix", "2,0;0,4", "--set", "ball", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BadParameter"));
}

#[test]
fn csv_and_text_formats() {
    for cmd in [
        vec!["analyze", "2,0;0,4"],
        vec!["equiv", "2,0;0,4", "4,0;0,16"],
        vec!["classify", "0,2;1,0"],
        vec!["dyadic", "2,0;0,2"],
    ] {
        let out = densilab(&[&cmd[..], &["--format", "csv"]].concat());
        assert_eq!(out.status.code(), Some(0), "{cmd:?}");
        let rows = csv_rows(&out);
        assert_eq!(rows[0], ["key", "value"]);
        let text = densilab(&[&cmd[..], &["--format", "text"]].concat());
        assert_eq!(text.status.code(), Some(0), "{cmd:?}");
        assert!(!text.stdout.is_empty());
    }
}
