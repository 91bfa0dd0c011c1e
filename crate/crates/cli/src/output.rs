//! Result tables, their CSV/JSON encodings, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use uniformize_core::dynamics::{format_float, Amplitudes, Trajectory};

use crate::config::Format;
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// One output table. Rows keep the order the scenario produced, which is
/// already sorted by the table's keys.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Columns `t, re_k, im_k, …, jnorm, gamma`.
    pub fn trajectory<S: Amplitudes>(name: &str, traj: &Trajectory<S>) -> Self {
        let width = traj.states.first().map(|s| s.amplitudes().len()).unwrap_or(0);
        let mut columns = vec!["t".to_string()];
        for k in 0..width {
            columns.push(format!("re_{k}"));
            columns.push(format!("im_{k}"));
        }
        columns.push("jnorm".into());
        columns.push("gamma".into());
        let rows = (0..traj.len())
            .map(|i| {
                let mut row = vec![Cell::Float(traj.times[i])];
                for z in traj.states[i].amplitudes() {
                    row.push(Cell::Float(z.re));
                    row.push(Cell::Float(z.im));
                }
                row.push(Cell::Float(traj.norms[i]));
                row.push(Cell::Float(traj.gammas[i]));
                row
            })
            .collect();
        Self { name: name.to_string(), columns, rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let mut text =
            serde_json::to_string_pretty(&json!({ "name": self.name, "columns": self.columns, "rows": rows }))
                .expect("tables serialize");
        text.push('\n');
        text
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Compact serialization with object keys sorted, the form that is hashed.
pub fn canonical_json(value: &Value) -> String {
    fn sort(v: &Value) -> Value {
        match v {
            Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                let mut out = Map::new();
                for k in keys {
                    out.insert(k.clone(), sort(&map[k]));
                }
                Value::Object(out)
            }
            Value::Array(items) => Value::Array(items.iter().map(sort).collect()),
            other => other.clone(),
        }
    }
    serde_json::to_string(&sort(value)).expect("values serialize")
}

/// Rendered files of one run, written in order by a single writer.
#[derive(Debug, Default)]
pub struct Emitter {
    files: Vec<(String, String)>,
}

impl Emitter {
    pub fn add(&mut self, name: String, contents: String) {
        self.files.push((name, contents));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn entries(&self) -> Vec<Value> {
        self.files
            .iter()
            .map(|(name, contents)| json!({ "file": name, "sha256": sha256_hex(contents.as_bytes()) }))
            .collect()
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let path = dir.join(name);
            fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}
