//! Delimited-text catalogs.
//!
//! A catalog file is comma-separated UTF-8 with a header row. The `time`
//! column holds decimal years or ISO-8601 dates; an optional `magnitude`
//! column allows a cutoff. Lines starting with `#` are comments, except
//! `# key=value` directives in the leading comment block:
//!
//! * `window_start`: origin of the observation window, in decimal years;
//! * `window_years`: window length.
//!
//! Without directives the window is `[floor(first), ceil(last))`, widened by
//! a year when the last event falls on an integer year.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{EventCatalog, SimulationWindow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub time_column: String,
    /// Defaults to `magnitude` when such a column exists.
    pub magnitude_column: Option<String>,
    pub cutoff: Option<f64>,
    pub window_start: Option<f64>,
    pub window_years: Option<f64>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            time_column: "time".into(),
            magnitude_column: None,
            cutoff: None,
            window_start: None,
            window_years: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogSource {
    pub path: PathBuf,
    pub rows_read: usize,
    pub below_cutoff: usize,
    pub duplicates_removed: usize,
    /// Decimal year of the window's origin; catalog times are relative to it.
    pub window_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedCatalog {
    pub catalog: EventCatalog,
    /// Parallel to the catalog's times when a magnitude column was read.
    pub magnitudes: Option<Vec<f64>>,
    pub source: CatalogSource,
}

impl IngestedCatalog {
    /// Event times in absolute decimal years.
    pub fn absolute_times(&self) -> Vec<f64> {
        let origin = self.source.window_start;
        self.catalog.times().iter().map(|t| t + origin).collect()
    }
}

/// Decimal year of an ISO-8601 date or date-time. Time zones are converted
/// to UTC; the fraction is the elapsed share of that calendar year.
pub fn decimal_year(text: &str) -> Option<f64> {
    let dt = if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        dt.naive_utc()
    } else if let Ok(dt) = NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S%.f") {
        dt
    } else if let Ok(dt) = NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S%.f") {
        dt
    } else {
        NaiveDate::parse_from_str(text, "%Y-%m-%d")
            .ok()?
            .and_time(NaiveTime::MIN)
    };
    let year = dt.year();
    let start = NaiveDate::from_ymd_opt(year, 1, 1)?.and_time(NaiveTime::MIN);
    let end = NaiveDate::from_ymd_opt(year + 1, 1, 1)?.and_time(NaiveTime::MIN);
    let elapsed = (dt - start).num_milliseconds() as f64;
    let total = (end - start).num_milliseconds() as f64;
    Some(year as f64 + elapsed / total)
}

fn parse_time(text: &str) -> Option<f64> {
    let text = text.trim();
    match text.parse::<f64>() {
        Ok(t) if t.is_finite() => Some(t),
        Ok(_) => None,
        Err(_) => decimal_year(text),
    }
}

fn directives(text: &str) -> impl Iterator<Item = (&str, &str)> {
    text.lines()
        .map_while(|l| l.trim_start().strip_prefix('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim(), v.trim()))
}

pub fn ingest_catalog(path: impl AsRef<Path>, options: &IngestOptions) -> Result<IngestedCatalog> {
    let path = path.as_ref();
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::FileNotFound { path: path.into() })
        }
        Err(source) => {
            return Err(Error::Io {
                path: path.into(),
                source,
            })
        }
    };
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.into(),
        line,
        message,
    };

    let mut window_start = options.window_start;
    let mut window_years = options.window_years;
    for (key, value) in directives(&text) {
        let slot = match key {
            "window_start" => &mut window_start,
            "window_years" => &mut window_years,
            _ => continue,
        };
        if slot.is_none() {
            let v = value
                .parse::<f64>()
                .map_err(|_| parse_err(1, format!("bad `{key}` directive `{value}`")))?;
            *slot = Some(v);
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let time_idx = column(&options.time_column)
        .ok_or_else(|| parse_err(1, format!("no `{}` column", options.time_column)))?;
    let mag_idx = match &options.magnitude_column {
        Some(name) => {
            Some(column(name).ok_or_else(|| parse_err(1, format!("no `{name}` column")))?)
        }
        None => column("magnitude"),
    };
    if options.cutoff.is_some() && mag_idx.is_none() {
        return Err(Error::Config(
            "a magnitude cutoff needs a magnitude column".into(),
        ));
    }

    let mut rows: Vec<(f64, Option<f64>)> = Vec::new();
    let mut rows_read = 0;
    let mut below_cutoff = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        rows_read += 1;
        let field = |i: usize| record.get(i).unwrap_or("");
        let raw = field(time_idx);
        let time = parse_time(raw).ok_or_else(|| parse_err(line, format!("bad time `{raw}`")))?;
        let magnitude = match mag_idx {
            Some(i) => {
                let raw = field(i);
                Some(
                    raw.parse::<f64>()
                        .ok()
                        .filter(|m| m.is_finite())
                        .ok_or_else(|| parse_err(line, format!("bad magnitude `{raw}`")))?,
                )
            }
            None => None,
        };
        if let (Some(cut), Some(m)) = (options.cutoff, magnitude) {
            if m < cut {
                below_cutoff += 1;
                continue;
            }
        }
        rows.push((time, magnitude));
    }
    if rows.is_empty() {
        return Err(Error::EmptyAfterFilter { path: path.into() });
    }

    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let before = rows.len();
    rows.dedup_by(|b, a| a.0 == b.0);
    let duplicates_removed = before - rows.len();

    let first = rows[0].0;
    let last = rows[rows.len() - 1].0;
    let origin = window_start.unwrap_or(first.floor());
    let length = match window_years {
        Some(l) => l,
        None => {
            let end = last.ceil();
            if end > last {
                end - origin
            } else {
                end + 1.0 - origin
            }
        }
    };
    let window = SimulationWindow::new(length)?;
    let times: Vec<f64> = rows.iter().map(|r| r.0 - origin).collect();
    let catalog = EventCatalog::new(times, window)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let magnitudes = mag_idx.map(|_| rows.iter().map(|r| r.1.unwrap_or(f64::NAN)).collect());
    Ok(IngestedCatalog {
        catalog,
        magnitudes,
        source: CatalogSource {
            path: path.into(),
            rows_read,
            below_cutoff,
            duplicates_removed,
            window_start: origin,
        },
    })
}

/// A catalog as ingestible text, with directives that pin its window.
pub fn catalog_to_csv(catalog: &EventCatalog, window_start: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# window_start={window_start}");
    let _ = writeln!(out, "# window_years={}", catalog.window().length_years());
    out.push_str("time\n");
    for t in catalog.times() {
        let _ = writeln!(out, "{}", t + window_start);
    }
    out
}
