//! Config-driven runner: `run`, `describe` and `verify`.
//!
//! Exit codes: 0 success, 1 a built-in check failed, 2 invalid input or
//! unwritable output, 3 a numerical guard tripped. Nothing is written unless
//! every table of the run was computed.

pub mod config;
pub mod describe;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use thiserror::Error;

use config::{ExperimentConfig, Format};
use output::{canonical_json, sha256_hex, Emitter};
use scenarios::{run_scenario, RunOptions};
use uniformize_core::dynamics::trajectory_file_name;
use uniformize_core::verify::{VerifySizes, DEFAULT_SEED};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical guard: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<uniformize_core::Error> for CliError {
    fn from(e: uniformize_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

pub struct RunArgs {
    pub config: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub timing: bool,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub run_id: String,
    pub files: Vec<PathBuf>,
    pub passed: bool,
}

fn read_config(path: &Path) -> Result<(ExperimentConfig, Value), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    Ok(read_config(path)?.0)
}

/// Hash of the canonical config with the effective seed filled in.
pub fn config_hash(raw: &Value, seed: u64) -> (Value, String) {
    let mut value = raw.clone();
    if let Value::Object(map) = &mut value {
        map.insert("seed".into(), json!(seed));
    }
    let hash = sha256_hex(canonical_json(&value).as_bytes());
    (value, hash)
}

pub fn run(args: &RunArgs) -> Result<RunOutcome, CliError> {
    let (config, raw) = read_config(&args.config)?;
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let format = args.format.or(config.output.format).unwrap_or(Format::Csv);
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let (canonical, hash) = config_hash(&raw, seed);
    let run_id = hash[..12].to_string();
    let scenario = config.scenario.name();

    let started = Instant::now();
    let output = run_scenario(&config, &RunOptions { seed, timing: args.timing })?;
    let wall_ms = if args.timing { started.elapsed().as_secs_f64() * 1e3 } else { 0.0 };

    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut emitter = Emitter::default();
    let mut tables = Vec::new();
    for (index, table) in output.tables.iter().enumerate() {
        let name = trajectory_file_name(&run_id, scenario, index).replace(".csv", &format!(".{ext}"));
        tables.push(json!({ "file": name, "table": table.name, "columns": table.columns, "rows": table.rows.len() }));
        emitter.add(name, table.render(format));
    }
    let digests = emitter.entries();
    for (entry, digest) in tables.iter_mut().zip(digests) {
        entry["sha256"] = digest["sha256"].clone();
    }
    let manifest = json!({
        "scenario": scenario,
        "run_id": run_id,
        "seed": seed,
        "format": ext,
        "config": canonical,
        "config_sha256": hash,
        "library": { "name": "uniformize-core", "version": uniformize_core::VERSION },
        "wall_time_ms": wall_ms,
        "passed": output.passed,
        "tables": tables,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    emitter.add(format!("{run_id}_{scenario}_manifest.json"), text);
    let files = emitter.write_all(&out_dir)?;
    Ok(RunOutcome { run_id, files, passed: output.passed })
}

pub fn describe_config(path: &Path) -> Result<String, CliError> {
    describe::describe(&load_config(path)?)
}

/// Full suite at default sizes; returns the report as CSV text.
pub fn verify(seed: u64) -> Result<(String, bool), CliError> {
    let report = scenarios::verify_report(seed, &VerifySizes::default())?;
    let text = scenarios::verify_tables(&report).iter().map(|t| t.to_csv()).collect::<Vec<_>>().join("\n");
    Ok((text, report.passed()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Validation("x".into()).exit_code(), 2);
        assert_eq!(CliError::Io("x".into()).exit_code(), 2);
        assert_eq!(CliError::Numerical("x".into()).exit_code(), 3);
        let guard = uniformize_core::Error::NumericalGuard("tail".into());
        assert!(matches!(CliError::from(guard), CliError::Numerical(_)));
        let bad = uniformize_core::Error::InvalidArgument("d".into());
        assert!(matches!(CliError::from(bad), CliError::Validation(_)));
    }

    #[test]
    fn hash_ignores_key_order_and_tracks_seed() {
        let a: Value = serde_json::from_str(r#"{"scenario": "gap", "run": {"nu": 1.0, "ns": [2]}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"run": {"ns": [2], "nu": 1.0}, "scenario": "gap"}"#).unwrap();
        assert_eq!(config_hash(&a, 42).1, config_hash(&b, 42).1);
        assert_ne!(config_hash(&a, 42).1, config_hash(&a, 43).1);
        let explicit: Value =
            serde_json::from_str(r#"{"scenario": "gap", "seed": 42, "run": {"nu": 1.0, "ns": [2]}}"#).unwrap();
        assert_eq!(config_hash(&a, 42).1, config_hash(&explicit, 42).1);
    }
}
