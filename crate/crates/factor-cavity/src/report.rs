//! CSV tables, JSON manifests and error records.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// First line of every CSV file.
pub const SCHEMA_LINE: &str = "# factor-cavity schema v1";

/// `git describe` of the build, or `unknown` outside a checkout.
pub const GIT_DESCRIBE: &str = env!("FACTOR_CAVITY_GIT_DESCRIBE");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shortest round-trip decimal form, so equal values print identically.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// A rectangular table of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        assert_eq!(self.header, other.header);
        self.rows.extend(other.rows);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Header plus rows, without the schema line.
    pub fn body(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_csv(&self) -> String {
        format!("{SCHEMA_LINE}\n{}", self.body())
    }
}

/// Parses a file written by [`Table::to_csv`].
pub fn read_csv(text: &str) -> anyhow::Result<Table> {
    let body = text
        .strip_prefix(SCHEMA_LINE)
        .ok_or_else(|| anyhow::anyhow!("missing schema line"))?;
    let mut r = csv::Reader::from_reader(body.trim_start_matches('\n').as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    for rec in r.records() {
        t.rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(t)
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub operation: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub budget: serde_json::Value,
    pub git_describe: String,
    pub workers: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputEntry>,
    pub summary: serde_json::Value,
    pub notes: Vec<String>,
}

impl Manifest {
    pub fn new(
        operation: &str,
        inputs_digest: String,
        seed: u64,
        budget: serde_json::Value,
        workers: usize,
    ) -> Self {
        Self {
            schema: 1,
            operation: operation.to_string(),
            inputs_digest,
            seed,
            budget,
            git_describe: GIT_DESCRIBE.to_string(),
            workers,
            wall_time_s: 0.0,
            outputs: Vec::new(),
            summary: serde_json::Value::Null,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub operation: String,
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

/// Writes `<stem>.csv` into `dir` and records it in the manifest.
pub fn write_table(
    dir: &Path,
    stem: &str,
    table: &Table,
    manifest: &mut Manifest,
) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.csv"));
    let text = table.to_csv();
    fs::write(&path, &text)?;
    manifest.outputs.push(OutputEntry {
        path: path.file_name().unwrap().to_string_lossy().into_owned(),
        sha256: sha256_hex(text.as_bytes()),
        rows: table.rows().len(),
    });
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        t.push(vec![num(0.1), num(-2.5e-13)]);
        let text = t.to_csv();
        assert!(text.starts_with("# factor-cavity schema v1\na,b\n"));
        assert_eq!(read_csv(&text).unwrap(), t);
    }
}
