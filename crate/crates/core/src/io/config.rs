//! Run configuration shared by the command line and config files.
//!
//! A config file is flat TOML whose keys are the long flag names, e.g.
//! `events-per-decade = 4`. Flags given on the command line win over the
//! file.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{
    BinCount, CalibrationKind, Chi2CountsTest, GapOrder, InterEventConfig, KsIntereventTest,
    Overlap, Stratification, TieBreak,
};
use crate::io::catalog::IngestOptions;
use crate::io::results::OutputFormat;
use crate::power::{
    CalibrationSettings, NullRatePolicy, PowerConfig, ReferenceKind, TestConfig, UntestablePolicy,
};
use crate::process::{ClusterProcessParams, OnsetRule, ProcessModel, SimulationWindow};
use crate::stats::KsAlternative;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CLUSTERPOWER_OUT_DIR";

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// Flat TOML file with defaults for any of these flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Cluster onsets per century
    #[arg(long)]
    pub clusters: Option<f64>,
    /// Events per decade inside a cluster
    #[arg(long)]
    pub events_per_decade: Option<f64>,
    /// Cluster duration in years
    #[arg(long)]
    pub cluster_years: Option<f64>,
    /// Observation window in years
    #[arg(long)]
    pub years: Option<f64>,
    /// What happens to an onset inside a running cluster: reject or defer
    #[arg(long)]
    pub onset_rule: Option<String>,
    /// Simulate a homogeneous Poisson process instead of the clustered one
    #[arg(long)]
    #[serde(default)]
    pub poisson: bool,
    /// Rate of the Poisson process, events per year
    #[arg(long)]
    pub rate: Option<f64>,

    /// Catalog file to read instead of simulating
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub time_column: Option<String>,
    #[arg(long)]
    pub magnitude_column: Option<String>,
    /// Drop events below this magnitude
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Window origin in decimal years (default: floor of the first event)
    #[arg(long)]
    pub window_start: Option<f64>,

    /// ks, chi2-counts or chi2-inter-n-event
    #[arg(long)]
    pub test: Option<String>,
    /// KS alternative: two-sided, greater or less
    #[arg(long)]
    pub alternative: Option<String>,
    /// Time-bin width in years for the count test
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Gap order for the inter-n-event test: a positive integer or `all`
    #[arg(long)]
    pub gap_order: Option<String>,
    /// non-overlapping or sliding
    #[arg(long)]
    pub overlap: Option<String>,
    /// Reference bins for the inter-n-event test: `auto` or an integer
    #[arg(long)]
    pub bins: Option<String>,
    /// erlang or simulated
    #[arg(long)]
    pub reference: Option<String>,
    /// Poisson catalogs used to build a simulated reference
    #[arg(long)]
    pub reference_catalogs: Option<usize>,
    /// Hypothesized rate: a number, `mean`, or a quantile such as `q0.9`
    #[arg(long)]
    pub null_rate: Option<String>,

    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// monte-carlo or analytic
    #[arg(long)]
    pub calibration: Option<String>,
    /// pooled or by-event-count
    #[arg(long)]
    pub calibration_scheme: Option<String>,
    #[arg(long)]
    pub calibration_trials: Option<usize>,
    /// randomized or conservative
    #[arg(long)]
    pub ties: Option<String>,
    /// exclude or count-as-accept
    #[arg(long)]
    pub untestable: Option<String>,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    pub workers: Option<usize>,

    /// Comma-separated cluster rates for a sweep
    #[arg(long)]
    pub clusters_axis: Option<String>,
    /// Comma-separated in-cluster event rates for a sweep
    #[arg(long)]
    pub events_axis: Option<String>,
    /// Comma-separated quantile levels
    #[arg(long)]
    pub levels: Option<String>,
    /// Also run the inter-n-event test at the mean and each quantile rate
    #[arg(long)]
    #[serde(default)]
    pub study: bool,

    /// Output file; relative paths resolve against $CLUSTERPOWER_OUT_DIR
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// csv or json (default: from the output extension, else csv)
    #[arg(long)]
    pub format: Option<String>,
}

macro_rules! prefer {
    ($a:ident, $b:ident; $($field:ident),* ; $($flag:ident),*) => {
        RunArgs {
            config: $a.config,
            $($field: $a.$field.or($b.$field),)*
            $($flag: $a.$flag || $b.$flag,)*
        }
    };
}

fn parse_enum<T: DeserializeOwned>(name: &str, value: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.to_ascii_lowercase()))
        .map_err(|_| Error::Config(format!("unknown {name} `{value}`")))
}

fn parse_list(name: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{s}` in {name}")))
        })
        .collect()
}

impl RunArgs {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Values from `self`, falling back to `file`.
    pub fn or(self, file: RunArgs) -> RunArgs {
        let a = self;
        let b = file;
        prefer!(a, b;
            clusters, events_per_decade, cluster_years, years, onset_rule, rate,
            catalog, time_column, magnitude_column, cutoff, window_start,
            test, alternative, bin_width, gap_order, overlap, bins, reference,
            reference_catalogs, null_rate, trials, alpha, seed, calibration,
            calibration_scheme, calibration_trials, ties, untestable, workers,
            clusters_axis, events_axis, levels, output, format;
            poisson, study)
    }

    /// Merges the file named by `--config`, if any.
    pub fn resolve_file(self) -> Result<RunArgs> {
        match &self.config {
            Some(path) => {
                let file = RunArgs::load(path)?;
                Ok(self.or(file))
            }
            None => Ok(self),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn window(&self) -> Result<SimulationWindow> {
        SimulationWindow::new(self.years.unwrap_or(crate::process::DEFAULT_WINDOW_YEARS))
    }

    fn has_process_flags(&self) -> bool {
        self.poisson
            || self.clusters.is_some()
            || self.events_per_decade.is_some()
            || self.cluster_years.is_some()
            || self.onset_rule.is_some()
            || self.rate.is_some()
    }

    /// Checks that at most one input source was given.
    pub fn check_input(&self) -> Result<()> {
        if self.catalog.is_some() && self.has_process_flags() {
            return Err(Error::Config(
                "give either a catalog file or process parameters, not both".into(),
            ));
        }
        Ok(())
    }

    pub fn process(&self) -> Result<ProcessModel> {
        let window = self.window()?;
        if self.poisson {
            if self.clusters.is_some() || self.events_per_decade.is_some() {
                return Err(Error::Config(
                    "--poisson excludes cluster parameters".into(),
                ));
            }
            let rate = self
                .rate
                .ok_or_else(|| Error::Config("--poisson needs --rate".into()))?;
            return ProcessModel::poisson(rate, window);
        }
        if self.rate.is_some() {
            return Err(Error::Config("--rate applies to --poisson only".into()));
        }
        let defaults = ClusterProcessParams::default();
        let mut p = ClusterProcessParams::new(
            self.clusters.unwrap_or(defaults.clusters_per_century),
            self.events_per_decade
                .unwrap_or(defaults.in_cluster_events_per_decade),
        )?
        .with_window(window)?;
        if let Some(d) = self.cluster_years {
            p = p.with_duration(d)?;
        }
        if let Some(rule) = &self.onset_rule {
            p = p.with_onset_rule(parse_enum::<OnsetRule>("onset rule", rule)?);
        }
        Ok(ProcessModel::Clustered(p))
    }

    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            time_column: self.time_column.clone().unwrap_or_else(|| "time".into()),
            magnitude_column: self.magnitude_column.clone(),
            cutoff: self.cutoff,
            window_start: self.window_start,
            window_years: self.years,
        }
    }

    pub fn test_config(&self) -> Result<TestConfig> {
        let name = self.test.as_deref().unwrap_or("ks");
        let test = match name.to_ascii_lowercase().as_str() {
            "ks" | "ks-interevent" | "a" => {
                let mut t = KsIntereventTest::default();
                if let Some(alt) = &self.alternative {
                    t.alternative = parse_enum::<KsAlternative>("KS alternative", alt)?;
                }
                TestConfig::Ks(t)
            }
            "chi2-counts" | "counts" | "b" => TestConfig::Chi2Counts(match self.bin_width {
                Some(w) => Chi2CountsTest::new(w)?,
                None => Chi2CountsTest::default(),
            }),
            "chi2-inter-n-event" | "inter-n" | "c" => {
                let mut config = InterEventConfig::default();
                if let Some(order) = &self.gap_order {
                    config.order = order.parse::<GapOrder>().map_err(Error::Config)?;
                }
                if let Some(overlap) = &self.overlap {
                    config.overlap = parse_enum::<Overlap>("overlap", overlap)?;
                }
                if let Some(bins) = &self.bins {
                    config.bins = bins.parse::<BinCount>().map_err(Error::Config)?;
                }
                config.validate()?;
                let TestConfig::Chi2InterNEvent {
                    reference_catalogs, ..
                } = TestConfig::chi2_inter_n_event()
                else {
                    unreachable!()
                };
                TestConfig::Chi2InterNEvent {
                    config,
                    reference: match &self.reference {
                        Some(r) => parse_enum::<ReferenceKind>("reference", r)?,
                        None => ReferenceKind::default(),
                    },
                    reference_catalogs: self.reference_catalogs.unwrap_or(reference_catalogs),
                }
            }
            _ => return Err(Error::Config(format!("unknown test `{name}`"))),
        };
        Ok(test)
    }

    pub fn null_rate_policy(&self) -> Result<NullRatePolicy> {
        let Some(text) = self.null_rate.as_deref() else {
            return Ok(NullRatePolicy::LongTermMean);
        };
        let text = text.trim().to_ascii_lowercase();
        if text == "mean" {
            return Ok(NullRatePolicy::LongTermMean);
        }
        let bad = || Error::Config(format!("bad null rate `{text}`"));
        match text.strip_prefix('q') {
            Some(level) => Ok(NullRatePolicy::Quantile(level.parse().map_err(|_| bad())?)),
            None => Ok(NullRatePolicy::Fixed(text.parse().map_err(|_| bad())?)),
        }
    }

    pub fn calibration_settings(&self) -> Result<CalibrationSettings> {
        let mut s = CalibrationSettings::default();
        if let Some(m) = &self.calibration {
            s.method = parse_enum::<CalibrationKind>("calibration", m)?;
        }
        if let Some(m) = &self.calibration_scheme {
            s.stratification = parse_enum::<Stratification>("calibration scheme", m)?;
        }
        if let Some(n) = self.calibration_trials {
            s.n_trials = n;
        }
        if let Some(t) = &self.ties {
            s.ties = parse_enum::<TieBreak>("tie rule", t)?;
        }
        Ok(s)
    }

    pub fn power_config(&self) -> Result<PowerConfig> {
        self.check_input()?;
        let mut c = PowerConfig::new(self.process()?, self.test_config()?);
        if let Some(n) = self.trials {
            c.n_trials = n;
        }
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        c.master_seed = self.seed();
        c.null_rate_policy = self.null_rate_policy()?;
        c.calibration = self.calibration_settings()?;
        if let Some(u) = &self.untestable {
            c.untestable = parse_enum::<UntestablePolicy>("untestable policy", u)?;
        }
        c.workers = self.workers;
        c.validate()?;
        Ok(c)
    }

    pub fn axis(&self, clusters: bool) -> Result<Vec<f64>> {
        let (name, value) = if clusters {
            ("clusters-axis", &self.clusters_axis)
        } else {
            ("events-axis", &self.events_axis)
        };
        match value {
            Some(v) => parse_list(name, v),
            None => Ok(vec![2.0, 3.0, 4.0, 5.0]),
        }
    }

    pub fn levels(&self) -> Result<Vec<f64>> {
        match &self.levels {
            Some(v) => parse_list("levels", v),
            None => Ok(vec![0.7, 0.9]),
        }
    }

    /// Where to write results: `--output`, resolved against the output
    /// directory from the environment, or `<dir>/<default_name>` when only
    /// the directory is set.
    pub fn output_target(&self, default_name: &str) -> Result<Option<(PathBuf, OutputFormat)>> {
        let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
        let explicit: Option<OutputFormat> = match &self.format {
            Some(f) => Some(f.parse().map_err(Error::Config)?),
            None => None,
        };
        let path = match (&self.output, dir) {
            (Some(p), Some(d)) if p.is_relative() => d.join(p),
            (Some(p), _) => p.clone(),
            (None, Some(d)) => {
                let ext = explicit.unwrap_or_default().extension();
                d.join(format!("{default_name}.{ext}"))
            }
            (None, None) => return Ok(None),
        };
        let format = explicit
            .or_else(|| OutputFormat::from_path(&path))
            .unwrap_or_default();
        Ok(Some((path, format)))
    }
}
