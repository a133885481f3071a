mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gausschan")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn matrix_json(rows: [[f64; 4]; 4]) -> String {
    serde_json::json!({ "order": ["xA", "pA", "xB", "pB"], "units": "vacuum=identity", "matrix": rows }).to_string()
}

const IDENTITY: [[f64; 4]; 4] = [[1., 0., 0., 0.], [0., 1., 0., 0.], [0., 0., 1., 0.], [0., 0., 0., 1.]];

#[test]
fn analyze_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cm = write(dir.path(), "id.json", &matrix_json(IDENTITY));
    let o = run(&["analyze", "--cm", &cm]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let r = &v["report"];
    assert_eq!(r["fidelity"], 0.5);
    assert_eq!(r["purity"], 1.0);
    assert_eq!(r["log_negativity"], 0.0);
    assert_eq!(r["q_lower_bound"], 0.0);
    assert_eq!(v["physical"], true);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn analyze_printed_s_class_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let f = &common::fixtures()[2];
    let csv: String = f.rows.iter().map(|r| r.map(|x| x.to_string()).join(",") + "\n").collect();
    let cm = write(dir.path(), "s5.csv", &csv);
    let out = dir.path().join("report.json");
    let o = run(&["analyze", "--cm", &cm, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let r = &v["report"];
    assert!((r["fidelity"].as_f64().unwrap() - 0.701).abs() < 0.01);
    assert!((r["log_negativity"].as_f64().unwrap() - 1.342).abs() < 0.05);
    let k = r["key_rate"].as_f64().unwrap();
    assert!((r["key_rate_kbit_s"].as_f64().unwrap() - 50.0 * k).abs() < 1e-12);
}

#[test]
fn analyze_rejects_asymmetric_input() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = IDENTITY;
    rows[1][3] = 0.4;
    let cm = write(dir.path(), "bad.json", &matrix_json(rows));
    let o = run(&["analyze", "--cm", &cm]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains('1') && err.contains('3'), "{err}");
}

#[test]
fn analyze_rejects_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let cm = write(dir.path(), "bad.csv", "1,0,0\n0,1,0\n0,0,1\n");
    assert_eq!(code(&run(&["analyze", "--cm", &cm])), 2);
    let order = write(dir.path(), "order.json", r#"{"order":["xA","xB","pA","pB"],"matrix":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}"#);
    assert_eq!(code(&run(&["analyze", "--cm", &order])), 2);
    assert_eq!(code(&run(&["analyze", "--cm", "/nonexistent/cm.json"])), 2);
}

#[test]
fn unphysical_input_warns_and_repairs() {
    let dir = tempfile::tempdir().unwrap();
    let half = IDENTITY.map(|r| r.map(|x| 0.5 * x));
    let cm = write(dir.path(), "half.json", &matrix_json(half));
    let o = run(&["analyze", "--cm", &cm]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["physical"], false);
    assert!(!v["warnings"].as_array().unwrap().is_empty());
    assert!(v["report"]["q_lower_bound"].is_null());

    let o = run(&["analyze", "--cm", &cm, "--repair"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((v["repaired_delta"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["report"]["lambda"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn pretty_table_has_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let cm = write(dir.path(), "id.json", &matrix_json(IDENTITY));
    let o = run(&["analyze", "--cm", &cm, "--pretty"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for label in ["lambda ", "lambda^TA", "W ", "E_N", "Q_L", "F ", "mu", "K "] {
        assert!(text.contains(label), "{label} missing from\n{text}");
    }
}

#[test]
fn simulate_pure_tmsv_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = run(&[
        "simulate", "--class", "s", "--sqz-db", "4", "--antisqz-db", "4", "--eta", "1", "--mu", "1", "--samples", "100",
        "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    let truth = &meta["ground_truth"];
    let ratio = 10f64.powf(0.4);
    let c = 0.5 * (ratio + 1.0 / ratio);
    let s = 0.5 * (ratio - 1.0 / ratio);
    let want = [[c, 0., s, 0.], [0., c, 0., -s], [s, 0., c, 0.], [0., -s, 0., c]];
    for i in 0..4 {
        for j in 0..4 {
            assert!((truth[i][j].as_f64().unwrap() - want[i][j]).abs() < 1e-12, "({i},{j})");
        }
    }
    assert_eq!(meta["seed"], 3);
}

#[test]
fn simulate_rejects_bad_specs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let out = out.to_str().unwrap();
    let base = ["simulate", "--class", "s", "--sqz-db", "4", "--antisqz-db", "8", "--seed", "1", "--out", out];
    let with = |extra: &[&str]| {
        let mut a: Vec<&str> = base.to_vec();
        a.extend_from_slice(extra);
        code(&run(&a))
    };
    assert_eq!(with(&["--samples", "0"]), 2);
    assert_eq!(with(&["--samples", "10", "--eta", "1.5"]), 2);
    assert_eq!(with(&["--samples", "10", "--mu", "0.2", "--eta", "0.5"]), 0);
    assert_eq!(with(&["--samples", "10", "--mu", "0.99", "--eta", "0.5"]), 2);
    assert_eq!(with(&["--samples", "10", "--mu", "1.2"]), 2);
    assert_eq!(with(&["--samples", "10", "--sqz-db", "4", "--antisqz-db", "2"]), 2);
    assert_eq!(code(&run(&["simulate", "--class", "q"])), 2);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<_> = ["a", "b"]
        .iter()
        .map(|n| {
            let p = dir.path().join(n);
            let o = run(&[
                "simulate", "--class", "m", "--sqz-db", "3", "--antisqz-db", "6", "--samples", "50", "--seed", "9",
                "--out", p.to_str().unwrap(),
            ]);
            assert_eq!(code(&o), 0);
            p
        })
        .collect();
    for name in ["s1.csv", "s2.csv", "s3.csv", "s4.csv", "s5.csv", "vacuum.csv", "metadata.json"] {
        assert_eq!(std::fs::read(outs[0].join(name)).unwrap(), std::fs::read(outs[1].join(name)).unwrap());
    }
}

#[test]
fn estimate_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d");
    let d = data.to_str().unwrap();
    let o = run(&[
        "simulate", "--class", "s", "--sqz-db", "4", "--antisqz-db", "8", "--samples", "20000", "--seed", "5", "--out", d,
    ]);
    assert_eq!(code(&o), 0);
    let o = run(&["estimate", "--samples", d]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("redundancy residual"), "{err}");
    let v = json(&o);
    assert_eq!(v["seed"], 5);
    assert!(v["tomography"]["reconstruction"]["cm"].is_array());
    let iv = &v["report"]["intervals"]["log_negativity"];
    assert!(iv["half_width"].as_f64().unwrap() > 0.0);
    assert_eq!(v["tomography"]["bootstrap"]["blocks"], 10);

    // Malformed sample file.
    std::fs::write(data.join("s2.csv"), "setting_alice_deg,setting_bob_deg,alice,bob\n90,0,0.1\n").unwrap();
    assert_eq!(code(&run(&["estimate", "--samples", d])), 2);
    assert_eq!(code(&run(&["estimate", "--samples", "/nonexistent"])), 2);
}

#[test]
fn sweep_output_and_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&["sweep", "--classes", "v,m,s", "--purities", "1,0.5,0.2", "--r-max", "1.5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    for line in table.lines().filter(|l| l.contains("1.000")) {
        let en: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
        assert_eq!(en, 0.0, "{line}");
    }
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let mut last: Option<(String, String, f64)> = None;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let key = (rec[0].to_string(), rec[1].to_string());
        let en: f64 = rec[3].parse().unwrap();
        if let Some((c, m, prev)) = &last {
            if (c, m) == (&key.0, &key.1) {
                assert!(en >= *prev, "E_N not monotone in {key:?}");
            }
        }
        last = Some((key.0, key.1, en));
    }
    assert_eq!(code(&run(&["sweep", "--purities", "0", "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["sweep", "--r-max", "-1", "--out", out.to_str().unwrap()])), 2);
}

#[test]
fn error_surface_zero_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = run(&["error-surface", "--grid", "phi=0,theta=0,xi=0,alpha=0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0][4].parse::<f64>().unwrap().abs() < 1e-9);
    assert_eq!(code(&run(&["error-surface", "--grid", "phi=1:0:0.5", "--out", out.to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["error-surface", "--grid", "gamma=0", "--out", out.to_str().unwrap()])), 2);
}

#[test]
fn channel_command() {
    let dir = tempfile::tempdir().unwrap();
    let eta: f64 = 0.87;
    let s = eta.sqrt();
    let x = [[s, 0., 0., 0.], [0., s, 0., 0.], [0., 0., 1., 0.], [0., 0., 0., 1.]];
    let y = [[1. - eta, 0., 0., 0.], [0., 1. - eta, 0., 0.], [0., 0., 0., 0.], [0., 0., 0., 0.]];
    let loss = write(dir.path(), "loss.json", &serde_json::json!({"X": x, "Y": y}).to_string());
    let o = run(&["channel", "--channel", &loss]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["completely_positive"], true);

    let neg = IDENTITY.map(|r| r.map(|v| -0.5 * v));
    let bad = write(dir.path(), "bad.json", &serde_json::json!({"X": IDENTITY, "Y": neg}).to_string());
    let v = json(&run(&["channel", "--channel", &bad]));
    assert_eq!(v["completely_positive"], false);
    assert!((v["margin"].as_f64().unwrap() + 0.5).abs() < 1e-12);

    let zero = [[0.0; 4]; 4];
    let id = write(dir.path(), "id.json", &serde_json::json!({"X": IDENTITY, "Y": zero}).to_string());
    let f = &common::fixtures()[0];
    let cm = write(dir.path(), "cm.json", &matrix_json(f.rows));
    let v = json(&run(&["channel", "--channel", &id, "--apply", &cm]));
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(v["output"][i][j].as_f64().unwrap(), f.rows[i][j]);
        }
    }
    let written = dir.path().join("out.json");
    assert_eq!(code(&run(&["channel", "--channel", &id, "--apply", &cm, "--out", written.to_str().unwrap()])), 0);
    let back = gausschan::io::read_cm(&written).unwrap();
    assert_eq!(back.rows(), f.rows);
    assert_eq!(code(&run(&["channel", "--channel", &cm])), 2);
}

#[test]
fn help_and_usage_codes() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["analyze"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}
