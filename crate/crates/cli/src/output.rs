//! Deterministic CSV and JSON output with content hashes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Format `x` with 17 significant digits, like C's `%.17g`.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        strip_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", strip_zeros(mantissa.to_string()))
    }
}

fn strip_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0');
    t.strip_suffix('.').unwrap_or(t).to_string()
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// A file written by a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Column-oriented numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| fmt17(*v)))?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    /// Read a numeric CSV with a header row.
    pub fn read_csv(path: &Path) -> CliResult<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        let columns: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if columns.is_empty() || columns.iter().all(|c| c.is_empty()) {
            return Err(CliError::Schema(format!("{}: missing header row", path.display())));
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Schema(format!("{}: row {}: non-numeric field {f:?}", path.display(), i + 2)))
                })
                .collect::<CliResult<Vec<f64>>>()?;
            if row.len() != columns.len() {
                return Err(CliError::Schema(format!("{}: row {} has {} fields, header has {}", path.display(), i + 2, row.len(), columns.len())));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}

/// Serialized writer for one run's output directory.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.files.push(OutputFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> CliResult<PathBuf> {
        self.write_bytes(name, &table.to_csv()?)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Record a file written by another routine.
    pub fn record(&mut self, path: &Path) -> CliResult<()> {
        let bytes = fs::read(path)?;
        let name = path
            .strip_prefix(&self.dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        self.files.push(OutputFile {
            path: name,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }
}
