//! Homogeneous Poisson catalogs and the clustered-by-construction process.
//!
//! The clustered process draws cluster onsets as a slow Poisson stream, gives
//! every cluster a fixed duration, and fills each cluster with a fast Poisson
//! stream of events. Nothing happens outside clusters, so a window can be
//! entirely quiet.

use rand::distributions::Open01;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Domain};
use crate::stats::EmpiricalCdf;

pub const DEFAULT_WINDOW_YEARS: f64 = 110.0;

/// Observation window `[0, length_years)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationWindow {
    length_years: f64,
}

impl SimulationWindow {
    pub fn new(length_years: f64) -> Result<Self> {
        if length_years > 0.0 && length_years.is_finite() {
            Ok(Self { length_years })
        } else {
            Err(Error::invalid(
                "length_years",
                format!("must be positive and finite, got {length_years}"),
            ))
        }
    }

    pub fn length_years(&self) -> f64 {
        self.length_years
    }

    pub fn contains(&self, t: f64) -> bool {
        (0.0..self.length_years).contains(&t)
    }
}

impl Default for SimulationWindow {
    fn default() -> Self {
        Self {
            length_years: DEFAULT_WINDOW_YEARS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    rate: f64,
}

impl PoissonParams {
    pub fn new(rate: f64) -> Result<Self> {
        if rate > 0.0 && rate.is_finite() {
            Ok(Self { rate })
        } else {
            Err(Error::invalid(
                "rate",
                format!("must be positive and finite, got {rate}"),
            ))
        }
    }

    /// Events per year.
    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// How an onset that falls inside a running cluster is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnsetRule {
    /// Drop the candidate onset.
    #[default]
    Reject,
    /// Start the cluster when the running one ends, producing adjacent
    /// clusters.
    Defer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterProcessParams {
    pub clusters_per_century: f64,
    pub in_cluster_events_per_decade: f64,
    pub cluster_duration_years: f64,
    pub window: SimulationWindow,
    #[serde(default)]
    pub onset_rule: OnsetRule,
}

impl Default for ClusterProcessParams {
    /// Three clusters per century, four events per decade inside a cluster,
    /// fifteen-year clusters, 110-year window.
    fn default() -> Self {
        Self {
            clusters_per_century: 3.0,
            in_cluster_events_per_decade: 4.0,
            cluster_duration_years: 15.0,
            window: SimulationWindow::default(),
            onset_rule: OnsetRule::default(),
        }
    }
}

impl ClusterProcessParams {
    pub fn new(clusters_per_century: f64, in_cluster_events_per_decade: f64) -> Result<Self> {
        let p = Self {
            clusters_per_century,
            in_cluster_events_per_decade,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_duration(mut self, years: f64) -> Result<Self> {
        self.cluster_duration_years = years;
        self.validate()?;
        Ok(self)
    }

    pub fn with_window(mut self, window: SimulationWindow) -> Result<Self> {
        self.window = window;
        self.validate()?;
        Ok(self)
    }

    pub fn with_onset_rule(mut self, rule: OnsetRule) -> Self {
        self.onset_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        positive("clusters_per_century", self.clusters_per_century)?;
        positive(
            "in_cluster_events_per_decade",
            self.in_cluster_events_per_decade,
        )?;
        positive("cluster_duration_years", self.cluster_duration_years)?;
        SimulationWindow::new(self.window.length_years)?;
        if self.cluster_duration_years > self.window.length_years {
            return Err(Error::invalid(
                "cluster_duration_years",
                "must not exceed the window length",
            ));
        }
        Ok(())
    }

    /// Cluster onsets per year.
    pub fn onset_rate(&self) -> f64 {
        self.clusters_per_century / 100.0
    }

    /// Events per year inside a cluster.
    pub fn in_cluster_rate(&self) -> f64 {
        self.in_cluster_events_per_decade / 10.0
    }
}

/// Half-open `[start, end)` span in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Disjoint cluster intervals, ordered by start, clipped to the window.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterLayout {
    intervals: Vec<Interval>,
}

impl ClusterLayout {
    pub fn new(intervals: Vec<Interval>, window: SimulationWindow) -> Result<Self> {
        for iv in &intervals {
            if !(iv.start >= 0.0 && iv.start < iv.end && iv.end <= window.length_years()) {
                return Err(Error::invalid(
                    "intervals",
                    format!("[{}, {}) is empty or outside the window", iv.start, iv.end),
                ));
            }
        }
        // adjacency (shared endpoint) is allowed
        if intervals.windows(2).any(|w| w[1].start < w[0].end) {
            return Err(Error::invalid(
                "intervals",
                "must be ordered and non-overlapping",
            ));
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn covered_years(&self) -> f64 {
        self.intervals.iter().map(Interval::duration).sum()
    }
}

/// Strictly increasing event times inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCatalog {
    times: Vec<f64>,
    window: SimulationWindow,
}

impl EventCatalog {
    pub fn new(times: Vec<f64>, window: SimulationWindow) -> Result<Self> {
        if let Some(&t) = times.iter().find(|&&t| !window.contains(t)) {
            return Err(Error::invalid(
                "times",
                format!("{t} lies outside [0, {})", window.length_years()),
            ));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("times", "must be strictly increasing"));
        }
        Ok(Self { times, window })
    }

    pub fn empty(window: SimulationWindow) -> Self {
        Self {
            times: Vec::new(),
            window,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn window(&self) -> SimulationWindow {
        self.window
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn into_times(self) -> Vec<f64> {
        self.times
    }
}

/// Appends a homogeneous Poisson stream on `[start, end)` using exponential
/// gaps.
fn poisson_stream<R: Rng + ?Sized>(
    rng: &mut R,
    rate: f64,
    start: f64,
    end: f64,
    out: &mut Vec<f64>,
) {
    let mut t = start;
    loop {
        let u: f64 = rng.sample(Open01);
        let next = t - u.ln() / rate;
        if next >= end {
            break;
        }
        // a gap below float resolution would duplicate a time
        if next > t {
            out.push(next);
        }
        t = next;
    }
}

pub fn sample_poisson_catalog(
    params: PoissonParams,
    window: SimulationWindow,
    seed: u64,
) -> EventCatalog {
    let mut rng = seed::stream(seed, Domain::Catalog, 0);
    let mut times = Vec::new();
    poisson_stream(
        &mut rng,
        params.rate(),
        0.0,
        window.length_years(),
        &mut times,
    );
    EventCatalog { times, window }
}

pub fn sample_cluster_onsets(params: &ClusterProcessParams, seed: u64) -> ClusterLayout {
    let mut rng = seed::stream(seed, Domain::Layout, 0);
    let length = params.window.length_years();
    let duration = params.cluster_duration_years;
    let mut candidates = Vec::new();
    poisson_stream(&mut rng, params.onset_rate(), 0.0, length, &mut candidates);

    let mut intervals = Vec::new();
    // unclipped end of the latest accepted cluster
    let mut busy_until = f64::NEG_INFINITY;
    for candidate in candidates {
        let start = if candidate >= busy_until {
            candidate
        } else {
            match params.onset_rule {
                OnsetRule::Reject => continue,
                OnsetRule::Defer => busy_until,
            }
        };
        if start >= length {
            continue;
        }
        busy_until = start + duration;
        intervals.push(Interval {
            start,
            end: busy_until.min(length),
        });
    }
    ClusterLayout { intervals }
}

/// Fills each interval of `layout` with a Poisson stream at `rate` events/year.
pub fn sample_events_in_layout(
    layout: &ClusterLayout,
    rate: f64,
    window: SimulationWindow,
    seed: u64,
) -> Result<EventCatalog> {
    PoissonParams::new(rate)?;
    let mut rng = seed::stream(seed, Domain::Events, 0);
    let mut times = Vec::new();
    for iv in &layout.intervals {
        poisson_stream(&mut rng, rate, iv.start, iv.end, &mut times);
    }
    EventCatalog::new(times, window)
}

pub fn sample_clustered_catalog(params: &ClusterProcessParams, seed: u64) -> EventCatalog {
    let layout = sample_cluster_onsets(params, seed);
    sample_events_in_layout(&layout, params.in_cluster_rate(), params.window, seed)
        .expect("validated parameters produce a valid catalog")
}

/// Events per year over the catalog's window.
pub fn mean_rate(catalog: &EventCatalog) -> f64 {
    catalog.len() as f64 / catalog.window.length_years()
}

/// A generator of catalogs: either a plain Poisson process or the clustered
/// process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProcessModel {
    Poisson { rate: f64, window: SimulationWindow },
    Clustered(ClusterProcessParams),
}

impl ProcessModel {
    pub fn poisson(rate: f64, window: SimulationWindow) -> Result<Self> {
        PoissonParams::new(rate)?;
        Ok(ProcessModel::Poisson { rate, window })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessModel::Poisson { rate, .. } => PoissonParams::new(*rate).map(|_| ()),
            ProcessModel::Clustered(p) => p.validate(),
        }
    }

    pub fn window(&self) -> SimulationWindow {
        match self {
            ProcessModel::Poisson { window, .. } => *window,
            ProcessModel::Clustered(p) => p.window,
        }
    }

    pub fn sample(&self, seed: u64) -> EventCatalog {
        match self {
            ProcessModel::Poisson { rate, window } => {
                sample_poisson_catalog(PoissonParams { rate: *rate }, *window, seed)
            }
            ProcessModel::Clustered(p) => sample_clustered_catalog(p, seed),
        }
    }
}

impl From<ClusterProcessParams> for ProcessModel {
    fn from(p: ClusterProcessParams) -> Self {
        ProcessModel::Clustered(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStatistics {
    pub mean_rate: f64,
    pub std_rate: f64,
    /// `(level, rate)` pairs in the order requested.
    pub quantiles: Vec<(f64, f64)>,
    pub n_samples: usize,
}

impl RateStatistics {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|(l, _)| (*l - level).abs() < 1e-12)
            .map(|&(_, r)| r)
    }

    pub fn from_rates(rates: &[f64], levels: &[f64]) -> Result<Self> {
        if rates.len() < 2 {
            return Err(Error::invalid("n_samples", "must be at least 2"));
        }
        check_levels(levels)?;
        let n = rates.len() as f64;
        let mean_rate = rates.iter().sum::<f64>() / n;
        let var = rates.iter().map(|r| (r - mean_rate).powi(2)).sum::<f64>() / (n - 1.0);
        let ecdf = EmpiricalCdf::new(rates)?;
        let quantiles = levels
            .iter()
            .map(|&l| ecdf.quantile(l).map(|q| (l, q)))
            .collect::<Result<_>>()?;
        Ok(Self {
            mean_rate,
            std_rate: var.sqrt(),
            quantiles,
            n_samples: rates.len(),
        })
    }
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::invalid("levels", "must not be empty"));
    }
    if let Some(l) = levels.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::invalid("levels", format!("{l} is outside (0, 1)")));
    }
    Ok(())
}

/// Mean, standard deviation and nearest-rank quantiles of the per-catalog mean
/// rate over `n_samples` independent catalogs.
pub fn rate_statistics(
    process: &ProcessModel,
    n_samples: usize,
    levels: &[f64],
    seed: u64,
) -> Result<RateStatistics> {
    process.validate()?;
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", "must be at least 2"));
    }
    check_levels(levels)?;
    let rates: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| mean_rate(&process.sample(seed::derive(seed, Domain::RateStats, i))))
        .collect();
    RateStatistics::from_rates(&rates, levels)
}
