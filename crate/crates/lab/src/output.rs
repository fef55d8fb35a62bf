//! CSV rows and JSON reports. The column layout is described in
//! `crates/lab/SCHEMA.md`; bump the schema versions when it changes.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::spec::ExperimentSpec;

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Columns in output order.
pub const COLUMNS: [&str; 12] =
    ["schema_version", "experiment", "n", "beta", "ell", "quantity", "value", "band", "samples", "seed", "code_version", "wall_ms"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub schema_version: u32,
    pub experiment: String,
    pub n: Option<usize>,
    pub beta: Option<f64>,
    pub ell: Option<usize>,
    pub quantity: String,
    pub value: f64,
    pub band: Option<f64>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub code_version: String,
    pub wall_ms: u64,
}

impl ResultRow {
    pub fn new(experiment: &str, seed: u64, quantity: &str, value: f64) -> Self {
        Self {
            schema_version: CSV_SCHEMA_VERSION,
            experiment: experiment.to_string(),
            n: None,
            beta: None,
            ell: None,
            quantity: quantity.to_string(),
            value,
            band: None,
            samples: None,
            seed,
            code_version: CODE_VERSION.to_string(),
            wall_ms: 0,
        }
    }

    /// A copy with another quantity and value.
    pub fn with(&self, quantity: &str, value: f64) -> Self {
        Self { quantity: quantity.to_string(), value, ..self.clone() }
    }

    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn ell(mut self, ell: usize) -> Self {
        self.ell = Some(ell);
        self
    }

    pub fn band(mut self, band: f64) -> Self {
        self.band = Some(band);
        self
    }

    pub fn samples(mut self, samples: usize) -> Self {
        self.samples = Some(samples);
        self
    }

    pub fn wall(mut self, ms: u64) -> Self {
        self.wall_ms = ms;
        self
    }
}

/// Schema-versioned JSON report written next to the CSV.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub id: String,
    pub seed: u64,
    pub code_version: String,
    pub spec: ExperimentSpec,
    pub results: serde_json::Value,
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(path: &Path, report: &Report) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, report)?;
    writeln!(f)?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir` and returns both paths.
pub fn write_all(dir: &Path, stem: &str, rows: &[ResultRow], report: &Report) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    write_csv(&csv, rows)?;
    write_report(&json, report)?;
    Ok((csv, json))
}
