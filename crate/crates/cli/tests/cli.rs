use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ljchain(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ljchain")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

const SMALL_CHAIN: &str = r#"{
  "experiment": "chain",
  "seed": 7,
  "grids": { "n": [64, 128], "ell": [0.5, 2.0] }
}"#;

#[test]
fn chain_runs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_CHAIN);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(ljchain(&["chain", "--config", &cfg], &a).status.success());
    assert!(ljchain(&["chain", "--config", &cfg], &b).status.success());
    assert_eq!(fs::read(a.join("chain.csv")).unwrap(), fs::read(b.join("chain.csv")).unwrap());
    // the summaries differ only in the echoed output directory
    let strip = |dir: &Path| {
        let mut s: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
        s["config"]["output_dir"] = serde_json::Value::Null;
        s
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn chain_flips_from_elastic_to_fractured() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL_CHAIN);
    let out = dir.path().join("o");
    assert!(ljchain(&["chain", "--config", &cfg], &out).status.success());
    let rows = csv_rows(&out.join("chain.csv"));
    assert_eq!(rows.len(), 4);
    for row in rows {
        let ratio: f64 = row[2].parse().unwrap();
        let expected = if ratio < 1.0 { "elastic" } else { "fractured" };
        assert_eq!(row[5], expected, "row {row:?}");
    }
}

#[test]
fn density_table_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    assert!(ljchain(&["density"], &out).status.success());
    for f in ["envelope_jcb.csv", "envelope_psi_2.csv"] {
        let rows = csv_rows(&out.join(f));
        assert!(rows.len() > 4000);
        for row in rows {
            let sampled: f64 = row[2].parse().unwrap();
            let closed: f64 = row[3].parse().unwrap();
            assert!((sampled - closed).abs() <= 1e-5, "{f}: {row:?}");
        }
    }
}

#[test]
fn audit_passes_for_the_default_family() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    assert!(ljchain(&["audit"], &out).status.success());
    let rows = csv_rows(&out.join("audit.csv"));
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r[1] == "true"));
}

#[test]
fn summary_reports_constants_and_discrepancy() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    assert!(ljchain(&["layer", "--K", "3"], &out).status.success());
    let s: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    let c = &s["constants"];
    // c_2, c_3
    assert_eq!(c["c"].as_array().unwrap().len(), 2);
    assert!(c["beta"].as_f64().unwrap() > 0.0);
    assert!(c["beta_discrepancy"].as_f64().unwrap() < 1e-8);
    assert!(c["lambda"].is_null());

    let out1 = dir.path().join("k1");
    assert!(ljchain(&["audit", "--K", "1"], &out1).status.success());
    let s: serde_json::Value = serde_json::from_slice(&fs::read(out1.join("summary.json")).unwrap()).unwrap();
    assert!(s["constants"]["beta_discrepancy"].is_null());
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), r#"{ "family": { "k1": 2.0, "k2": 1.0, "K": 2 } }"#);
    let out = dir.path().join("o");
    assert!(ljchain(&["audit", "--config", &cfg, "--k1", "3"], &out).status.success());
    let s: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["config"]["family"]["k1"], 3.0);
    assert_eq!(s["config"]["family"]["k2"], 1.0);
}

#[test]
fn bad_configs_exit_with_code_2_and_write_nothing() {
    let dir = TempDir::new().unwrap();
    let cases = [
        r#"{ "family": { "k1": 1, "k2": 1, "K": 2, "extra": 1 } }"#,
        r#"{ "family": { "k1": -1, "k2": 1, "K": 2 } }"#,
        r#"{ "grids": { "n": [32768] } }"#,
        r#"{ "experiment": "phi" }"#,
        "{ not json",
    ];
    for (k, body) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), body);
        let out = dir.path().join(format!("o{k}"));
        let res = ljchain(&["audit", "--config", &cfg], &out);
        assert_eq!(res.status.code(), Some(2), "case {body}: {}", String::from_utf8_lossy(&res.stderr));
        assert!(!out.exists());
    }
}

#[test]
fn decay_certificate_requires_k2() {
    let dir = TempDir::new().unwrap();
    let res = ljchain(&["decay", "--K", "3"], &dir.path().join("o"));
    assert_eq!(res.status.code(), Some(2));
    let res = ljchain(&["decay"], &dir.path().join("ok"));
    assert!(res.status.success());
}
