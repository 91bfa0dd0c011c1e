use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uniformize"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn run(name: &str, out: &Path, extra: &[&str]) -> Output {
    bin().args(["run", "--config"]).arg(config(name)).arg("--out-dir").arg(out).args(extra).output().unwrap()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .map(|entries| {
            entries
                .map(|e| e.unwrap().path())
                .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
                .collect()
        })
        .unwrap_or_default()
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Sorted keys, no whitespace; written out here rather than reusing the crate's helper.
fn canonical(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<_> = map.keys().collect();
            keys.sort();
            let body: Vec<String> =
                keys.iter().map(|k| format!("{}:{}", Value::String((*k).clone()), canonical(&map[*k]))).collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(items) => format!("[{}]", items.iter().map(canonical).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}

fn manifest(dir: &Path) -> Value {
    let (_, bytes) = files(dir).into_iter().find(|(name, _)| name.ends_with("_manifest.json")).expect("manifest");
    serde_json::from_slice(&bytes).unwrap()
}

#[test]
fn non_hermitian_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let result = run("invalid_non_hermitian", &out, &[]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("Hermitian"));
    assert!(files(&out).is_empty());
}

#[test]
fn tail_guard_exits_3_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let result = run("describe_tail", dir.path(), &[]);
    assert_eq!(result.status.code(), Some(3));
    assert!(files(dir.path()).is_empty());
}

#[test]
fn missing_config_and_unknown_fields_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let result = bin().args(["run", "--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"scenario": "gap", "modle": {}}"#).unwrap();
    let result = bin().args(["run", "--config"]).arg(&bad).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert_eq!(files(dir.path()).len(), 1);
}

#[test]
fn manifest_hash_matches_canonical_config() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("hartree_two_mode", dir.path(), &["--seed", "7"]).status.success());
    let m = manifest(dir.path());
    let mut source: Value = serde_json::from_str(&fs::read_to_string(config("hartree_two_mode")).unwrap()).unwrap();
    source["seed"] = 7.into();
    let hash = hex(canonical(&source).as_bytes());
    assert_eq!(m["config_sha256"], Value::String(hash.clone()));
    assert_eq!(m["run_id"], Value::String(hash[..12].to_string()));
    assert_eq!(m["seed"], 7);
    assert_eq!(m["wall_time_ms"], 0.0);
    let written = files(dir.path());
    for table in m["tables"].as_array().unwrap() {
        let name = table["file"].as_str().unwrap();
        assert!(name.starts_with(&hash[..12]) && name.contains("_hartree_"));
        assert_eq!(table["sha256"], Value::String(hex(&written[name])));
    }
}

#[test]
fn csv_and_json_carry_the_same_values() {
    let dir = tempfile::tempdir().unwrap();
    let (csv_dir, json_dir) = (dir.path().join("csv"), dir.path().join("json"));
    assert!(run("gap_lattice", &csv_dir, &[]).status.success());
    assert!(run("gap_lattice", &json_dir, &["--format", "json"]).status.success());
    let csv = files(&csv_dir).into_iter().find(|(n, _)| n.ends_with("_0.csv")).unwrap().1;
    let json = files(&json_dir).into_iter().find(|(n, _)| n.ends_with("_0.json")).unwrap().1;
    let table: Value = serde_json::from_slice(&json).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(table["columns"].as_array().unwrap().len(), header.len());
    for (line, row) in lines.zip(table["rows"].as_array().unwrap()) {
        for (cell, value) in line.split(',').zip(row.as_array().unwrap()) {
            assert_eq!(cell.parse::<f64>().unwrap(), value.as_f64().unwrap());
        }
    }
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["epsilon_convergence_two_mode", "gap_lattice", "epsilon_soliton_two_mode"] {
        let one = dir.path().join(format!("{name}_1"));
        let four = dir.path().join(format!("{name}_4"));
        assert!(run(name, &one, &["--threads", "1"]).status.success());
        assert!(run(name, &four, &["--threads", "4"]).status.success());
        assert_eq!(files(&one), files(&four), "{name}");
    }
}

#[test]
fn every_example_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(config("x").parent().unwrap()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        if name.starts_with("describe_") || name.starts_with("invalid_") {
            continue;
        }
        let out = dir.path().join(&name);
        let result = run(&name, &out, &[]);
        assert!(result.status.success(), "{name}: {}", String::from_utf8_lossy(&result.stderr));
        let m = manifest(&out);
        assert_eq!(m["passed"], true, "{name}");
        assert_eq!(files(&out).len(), m["tables"].as_array().unwrap().len() + 1);
    }
}

#[test]
fn epsilon_convergence_table_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("epsilon_convergence_two_mode", dir.path(), &[]).status.success());
    let orders = files(dir.path()).into_iter().find(|(n, _)| n.ends_with("_1.csv")).unwrap().1;
    let text = String::from_utf8(orders).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let order: f64 = cells[2].parse().unwrap();
        assert!((0.5..=1.5).contains(&order), "{line}");
        assert_eq!(cells[3], "true");
    }
}

#[test]
fn describe_examples() {
    let text = |name: &str| {
        let out = bin().args(["describe", "--config"]).arg(config(name)).output().unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    let sectors = text("describe_sectors");
    assert!(sectors.contains("n = 0..8: 1 2 3 4 5 6 7 8 9") && sectors.contains("total: 45"), "{sectors}");
    let full = text("describe_full_power");
    assert!(full.contains("6561 exceeds the full-sector cap") && full.contains("(dimension 45) is allowed"), "{full}");
    // Upper tail of Poisson(8) beyond 16, summed directly.
    let mut term = (-8.0f64).exp();
    let mut head = term;
    for k in 1..=16 {
        term *= 8.0 / k as f64;
        head += term;
    }
    let tail = text("describe_tail");
    assert!(tail.contains(&format!("{:.6e}", 1.0 - head)), "{tail}");
    let bad = bin().args(["describe", "--config"]).arg(config("invalid_non_hermitian")).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn algebra_verify_scenario_reports_passing_checks() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run("algebra_verify", dir.path(), &[]).status.success());
    let report = files(dir.path()).into_iter().find(|(n, _)| n.ends_with("_0.csv")).unwrap().1;
    let text = String::from_utf8(report).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",true"), "{line}");
        if line.starts_with("appendix_") {
            let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!(value <= 1e-9);
        }
    }
}
