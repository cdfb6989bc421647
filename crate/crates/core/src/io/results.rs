//! Result files.
//!
//! Every file carries the artifact version, the master seed, a hash of the
//! run configuration and the configuration itself. CSV files put these in
//! leading `# key=value` lines; JSON files in a `metadata` object next to a
//! `rows` array whose objects use the CSV column names.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::power::PowerGrid;
use crate::stats::Histogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    /// Format implied by a file extension, if any.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }

    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

/// Hex SHA-256 prefix of the configuration's JSON form.
pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    let json = serde_json::to_vec(config).map_err(|e| Error::Config(e.to_string()))?;
    Ok(Sha256::digest(&json)
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub config_hash: String,
    pub config: serde_json::Value,
}

impl RunMetadata {
    pub fn new<C: Serialize>(command: &str, master_seed: u64, config: &C) -> Result<Self> {
        Ok(Self {
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            master_seed,
            config_hash: config_hash(config)?,
            config: serde_json::to_value(config).map_err(|e| Error::Config(e.to_string()))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_start: f64,
    pub bin_end: f64,
    pub count: u64,
    pub fraction: f64,
}

pub fn histogram_rows(h: &Histogram) -> Vec<HistogramRow> {
    let total = h.in_range().max(1) as f64;
    h.bins()
        .map(|(bin_start, bin_end, count)| HistogramRow {
            bin_start,
            bin_end,
            count,
            fraction: count as f64 / total,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub clusters_per_century: f64,
    pub events_per_decade: f64,
    pub power: Option<f64>,
    pub std_error: Option<f64>,
    pub n_effective: Option<usize>,
    pub error: Option<String>,
}

pub fn grid_rows(grid: &PowerGrid) -> Vec<GridRow> {
    grid.iter()
        .map(|c| GridRow {
            clusters_per_century: c.clusters_per_century,
            events_per_decade: c.events_per_decade,
            power: c.estimate.map(|e| e.power),
            std_error: c.estimate.map(|e| e.std_error),
            n_effective: c.estimate.map(|e| e.n_effective),
            error: c.error.clone(),
        })
        .collect()
}

/// Metadata as leading `# key=value` lines of a CSV file.
pub fn metadata_comment(meta: &RunMetadata) -> String {
    format!(
        "# version={}\n# command={}\n# master_seed={}\n# config_hash={}\n# config={}\n",
        meta.version, meta.command, meta.master_seed, meta.config_hash, meta.config
    )
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// Renders rows and metadata in the given format.
pub fn render_results<R: Serialize>(
    rows: &[R],
    meta: &RunMetadata,
    format: OutputFormat,
) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    match format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a, R> {
                metadata: &'a RunMetadata,
                rows: &'a [R],
            }
            let mut s = serde_json::to_string_pretty(&Doc {
                metadata: meta,
                rows,
            })
            .map_err(|e| Error::Config(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let mut out = metadata_comment(meta);
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(csv_err)?;
            }
            let body = w.into_inner().map_err(csv_err)?;
            out.push_str(&String::from_utf8(body).map_err(csv_err)?);
            Ok(out)
        }
    }
}

/// Writes rows to `path`. Nothing is written when `rows` is empty.
pub fn emit_results<R: Serialize>(
    rows: &[R],
    meta: &RunMetadata,
    format: OutputFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = render_results(rows, meta, format)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}
