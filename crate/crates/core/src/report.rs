//! Metric records and CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "hhi")]
    Hhi,
    #[serde(rename = "leverage")]
    Leverage,
    #[serde(rename = "rdi")]
    Rdi,
    #[serde(rename = "r2_out")]
    RealizedRisk,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Hhi, Metric::Leverage, Metric::Rdi, Metric::RealizedRisk];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Hhi => "hhi",
            Metric::Leverage => "leverage",
            Metric::Rdi => "rdi",
            Metric::RealizedRisk => "r2_out",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "metric",
                name: s.to_string(),
                valid: Self::ALL.map(|m| m.name()).join(", "),
            })
    }
}

/// One metric value with the labels of the run that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    /// Model label in simulations, dataset label in backtests.
    pub context: String,
    pub estimator: String,
    pub strategy: String,
    pub n: Option<usize>,
    pub window: Option<usize>,
    pub metric: Metric,
    pub value: f64,
}

/// SHA-256 of the canonical JSON serialization of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&json)))
}

/// First line of every output file.
pub fn provenance_line(hash: &str, seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("# config_hash={hash} seed={s}"),
        None => format!("# config_hash={hash}"),
    }
}

/// Writes `provenance` as a comment line followed by a CSV table.
pub fn write_csv<P: AsRef<Path>>(
    path: P,
    provenance: &str,
    header: &[String],
    rows: &[Vec<String>],
) -> Result<()> {
    let path = path.as_ref();
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "{provenance}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_csv`], skipping `#` comment lines.
pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

/// Formats a float for CSV output; absent values become empty cells.
pub fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.10e}"))
}
