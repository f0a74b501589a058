use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_fbmbt"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn constant(report: &Value, name: &str) -> f64 {
    report["series_constants"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()["value"].as_f64().unwrap()
}

#[test]
fn constants_at_one_sixth() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), r#"{"experiment": "constants", "H": 0.16666666666666666}"#, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(dir.path(), "constants.json");
    assert!((constant(&r, "S") - 0.89853).abs() < 5e-5);
    assert!((constant(&r, "kappa1") - 0.09675).abs() < 5e-5);
    for c in r["series_constants"].as_array().unwrap() {
        assert!(c["tail_bound"].as_f64().unwrap() < 1e-6);
    }
    for key in ["config", "series_constants", "per_level", "tests", "rates", "runtime_seconds", "seed_lineage"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn taylor_table_entries() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), r#"{"experiment": "taylor-table", "output": {"json": "t.json", "csv": "t.csv"}}"#, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(dir.path(), "t.json");
    let table = r["taylor_table"].as_array().unwrap();
    let exact = |a: u64, b: u64| table.iter().find(|e| e["a1"] == a && e["a2"] == b).unwrap()["exact"].as_str().unwrap().to_string();
    assert_eq!(exact(1, 0), "1");
    assert_eq!(exact(3, 0), "1/24");
    assert_eq!(exact(2, 1), "1/8");
    assert_eq!(exact(1, 2), "1/8");
    assert!(table.iter().filter(|e| (e["a1"].as_u64().unwrap() + e["a2"].as_u64().unwrap()) % 2 == 0).all(|e| e["exact"] == "0"));
}

#[test]
fn identity_suite_passes() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), r#"{"experiment": "identity-suite", "replications": 100, "master_seed": 7}"#, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = json(dir.path(), "identity-suite.json");
    for t in r["tests"].as_array().unwrap() {
        assert_eq!(t["verdict"], "pass");
        assert!(t["statistic"].as_f64().unwrap() <= 1e-10);
    }
    let csv = std::fs::read_to_string(dir.path().join("identity-suite.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5 * 100);
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let config = r#"{"experiment": "skeleton-suite", "levels": [6, 8], "replications": 300, "master_seed": 42}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(run(a.path(), config, &["--workers", "1"]).status.success());
    assert!(run(b.path(), config, &["--workers", "3"]).status.success());
    let csv = |d: &TempDir| std::fs::read(d.path().join("skeleton-suite.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));
    let strip = |d: &TempDir| {
        let mut v = json(d.path(), "skeleton-suite.json");
        v.as_object_mut().unwrap().remove("runtime_seconds");
        v
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn csv_schema() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), r#"{"experiment": "converge-h-gt", "levels": [4, 6, 8], "replications": 40}"#, &[]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    let csv = std::fs::read_to_string(dir.path().join("converge-h-gt.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("replication,seed,statistic,value"));
    assert!(!csv.contains('\r'));
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4, "{line}");
        let mantissa = cols[3].trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17, "{line}");
        let v: f64 = cols[3].parse().unwrap();
        assert!(v.is_finite());
        rows += 1;
    }
    assert_eq!(rows, 3 * 5 * 40);
    let r = json(dir.path(), "converge-h-gt.json");
    assert_eq!(r["per_level"].as_array().unwrap().len(), 3 * 5);
    assert_eq!(r["rates"].as_array().unwrap().len(), 5);
    let first = &r["per_level"][0];
    for key in ["n", "mean", "variance", "stderr", "count"] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["seed_lineage"]["batches"].as_array().unwrap().len(), 2 * 3);
}

#[test]
fn law_experiment_reports_two_sample_tests() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"experiment": "law-h-eq", "levels": [8], "replications": 60, "mesh": 0.015625, "function": "x^3"}"#;
    let out = run(dir.path(), config, &[]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    let r = json(dir.path(), "law-h-eq.json");
    let tests = r["tests"].as_array().unwrap();
    assert_eq!(tests.len(), 2);
    for t in tests {
        let p = t["p_value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    assert!(r["series_constants"].as_array().unwrap().iter().all(|c| c["tail_bound"].is_number()));
}

#[test]
fn failed_verdict_exits_one() {
    let dir = TempDir::new().unwrap();
    // the tail bound of a two-term truncation is far above the accepted level
    let out = run(dir.path(), r#"{"experiment": "constants", "truncation": 2}"#, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL series_tail"));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    for (config, key) in [
        (r#"{"experiment": "diverge-h-lt", "levels": [12, 10, 14]}"#, "levels"),
        (r#"{"experiment": "law-h-eq", "function": "tan(x)"}"#, "function"),
        (r#"{"experiment": "nope"}"#, "config"),
    ] {
        let out = run(dir.path(), config, &[]);
        assert_eq!(out.status.code(), Some(2), "{config}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("`{key}`")), "{config}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_fbmbt")).args(["--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
