use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentKind;

/// Per-trial seed: `base ⊕ first 8 bytes of SHA-256(key # index)`.
pub fn derive_seed(base: u64, key: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(key.as_bytes());
    h.update(b"#");
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    base ^ u64::from_le_bytes(head)
}

/// One measured cell of a result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Bool(bool),
    Int(u64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => Ok(()),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            // Display prints the shortest string that parses back to the same bits.
            Value::Float(x) => write!(f, "{x}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as u64)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(o: Option<T>) -> Self {
        o.map_or(Value::Null, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: ExperimentKind,
    /// Job key; together with `trial` it identifies a replayable unit.
    pub condition: String,
    pub trial: usize,
    pub seed: u64,
    pub values: Vec<(String, Value)>,
    pub censored: bool,
    pub wall_ms: f64,
}

impl ResultRecord {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    pub fn float(&self, name: &str) -> Option<f64> {
        match self.get(name)? {
            Value::Float(x) => Some(*x),
            Value::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn int(&self, name: &str) -> Option<u64> {
        match self.get(name)? {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn flag(&self, name: &str) -> Option<bool> {
        match self.get(name)? {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn text(&self, name: &str) -> Option<&str> {
        match self.get(name)? {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Measured fields with the wall time left out.
    pub fn measured(&self) -> Vec<String> {
        self.csv_fields().into_iter().take(self.values.len() + 5).collect()
    }

    fn csv_fields(&self) -> Vec<String> {
        let mut out = vec![
            self.experiment.name().to_string(),
            self.condition.clone(),
            self.trial.to_string(),
            self.seed.to_string(),
        ];
        out.extend(self.values.iter().map(|(_, v)| v.to_string()));
        out.push(self.censored.to_string());
        out.push(self.wall_ms.to_string());
        out
    }
}

pub const LEADING_COLUMNS: [&str; 4] = ["experiment", "condition", "trial", "seed"];
pub const TRAILING_COLUMNS: [&str; 2] = ["censored", "wall_ms"];

/// Writes `records` as CSV under a fixed header; every record must carry
/// exactly the `columns` value fields, in order.
pub fn write_records<W: Write>(columns: &[&str], records: &[ResultRecord], w: W) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<&str> =
        LEADING_COLUMNS.iter().chain(columns).chain(TRAILING_COLUMNS.iter()).copied().collect();
    out.write_record(&header)?;
    for r in records {
        let names: Vec<&str> = r.values.iter().map(|(k, _)| k.as_str()).collect();
        anyhow::ensure!(names == columns, "record fields {names:?} do not match header {columns:?}");
        out.write_record(r.csv_fields())?;
    }
    out.flush()?;
    Ok(())
}
