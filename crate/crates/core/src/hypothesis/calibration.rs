//! Monte Carlo null calibration.
//!
//! A calibration replaces an analytic p-value with the rank of the observed
//! statistic among statistics of simulated null catalogs. Two schemes exist:
//!
//! * [`Stratification::Pooled`] simulates Poisson catalogs at a stated null
//!   rate, so the event count varies from catalog to catalog.
//! * [`Stratification::ByEventCount`] simulates, for each event count, catalogs
//!   of exactly that many events placed uniformly in the window. This is the
//!   Poisson law conditional on the count, which does not depend on the rate,
//!   so tests that estimate the rate from the catalog are calibrated exactly
//!   whatever the true rate.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CatalogStatistic, TestId};
use crate::error::{Error, Result};
use crate::process::{sample_poisson_catalog, EventCatalog, PoissonParams, SimulationWindow};
use crate::seed::{self, Domain};

pub const MIN_CALIBRATION_TRIALS: usize = 1000;

/// Redraws allowed per trial when a simulated null catalog is too sparse.
const MAX_REDRAWS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Ties count against the observation: `(1 + #{T >= s}) / (N + 1)`.
    Conservative,
    /// The observation takes a uniformly random rank among its ties, which
    /// keeps p-values uniform for discrete statistics.
    #[default]
    Randomized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stratification {
    #[default]
    Pooled,
    ByEventCount,
}

/// Sorted null statistics; the empirical upper tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    sorted: Vec<f64>,
}

impl TailTable {
    pub fn new(mut statistics: Vec<f64>) -> Result<Self> {
        if statistics.is_empty() {
            return Err(Error::EmptySample);
        }
        if statistics.iter().any(|s| s.is_nan()) {
            return Err(Error::invalid("statistics", "contains NaN"));
        }
        statistics.sort_by(f64::total_cmp);
        Ok(Self { sorted: statistics })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// `(#{T > s}, #{T == s})`, with equality up to rounding noise.
    fn rank(&self, s: f64) -> (usize, usize) {
        let tol = 1e-10 * s.abs().max(1.0);
        let below = self.sorted.partition_point(|&t| t < s - tol);
        let at_or_below = self.sorted.partition_point(|&t| t <= s + tol);
        (self.sorted.len() - at_or_below, at_or_below - below)
    }

    /// Calibrated p-value of `s`. `u` in `[0, 1)` picks the rank among ties
    /// under [`TieBreak::Randomized`].
    pub fn p_value(&self, s: f64, ties: TieBreak, u: f64) -> f64 {
        let (greater, equal) = self.rank(s);
        let n = self.sorted.len() as f64;
        let extra = match ties {
            TieBreak::Conservative => equal,
            TieBreak::Randomized => ((u * (equal + 1) as f64) as usize).min(equal),
        };
        ((1 + greater + extra) as f64 / (n + 1.0)).min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Strata {
    Pooled(TailTable),
    ByCount(BTreeMap<usize, TailTable>),
}

/// Immutable null calibration for one test configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    test: TestId,
    fingerprint: String,
    /// Rate of the simulated Poisson nulls; `None` when stratified by count.
    null_rate: Option<f64>,
    window: SimulationWindow,
    trials_per_table: usize,
    ties: TieBreak,
    strata: Strata,
}

fn fingerprint_of<S: CatalogStatistic + ?Sized>(stat: &S) -> String {
    let digest = Sha256::digest(stat.fingerprint().as_bytes());
    digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
}

fn check_trials(n_trials: usize) -> Result<()> {
    if n_trials < MIN_CALIBRATION_TRIALS {
        return Err(Error::invalid(
            "n_trials",
            format!("calibration needs at least {MIN_CALIBRATION_TRIALS} trials, got {n_trials}"),
        ));
    }
    Ok(())
}

/// Simulates `n_trials` Poisson catalogs at `null_rate`, computes the test
/// statistic of each, and keeps the empirical tail. Null catalogs too sparse
/// for the test are redrawn, matching a test that reports them as untestable.
pub fn build_null_calibration<S: CatalogStatistic + ?Sized>(
    stat: &S,
    null_rate: f64,
    window: SimulationWindow,
    n_trials: usize,
    seed: u64,
) -> Result<NullCalibration> {
    let params = PoissonParams::new(null_rate)?;
    check_trials(n_trials)?;
    let statistics = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| {
            for attempt in 0..MAX_REDRAWS {
                let s = seed::derive(
                    seed::derive(seed, Domain::Calibration, i),
                    Domain::Trial,
                    attempt,
                );
                let catalog = sample_poisson_catalog(params, window, s);
                match stat.statistic(&catalog) {
                    Ok(v) => return Ok(v),
                    Err(e) if e.is_untestable() => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::invalid(
                "null_rate",
                format!("null catalogs at rate {null_rate} are almost never testable"),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NullCalibration {
        test: stat.test_id(),
        fingerprint: fingerprint_of(stat),
        null_rate: Some(null_rate),
        window,
        trials_per_table: n_trials,
        ties: TieBreak::default(),
        strata: Strata::Pooled(TailTable::new(statistics)?),
    })
}

/// `n` sorted uniform times in the window.
fn uniform_catalog<R: Rng>(
    rng: &mut R,
    n: usize,
    window: SimulationWindow,
) -> Option<EventCatalog> {
    let mut times: Vec<f64> = (0..n)
        .map(|_| rng.gen::<f64>() * window.length_years())
        .collect();
    times.sort_by(f64::total_cmp);
    EventCatalog::new(times, window).ok()
}

/// One table per requested event count. Each table depends only on
/// `(seed, count)`, so the set of counts requested does not change any table.
/// Counts the statistic is undefined for are skipped.
pub fn build_count_conditional_calibration<S, I>(
    stat: &S,
    window: SimulationWindow,
    counts: I,
    n_trials: usize,
    seed: u64,
) -> Result<NullCalibration>
where
    S: CatalogStatistic + ?Sized,
    I: IntoIterator<Item = usize>,
{
    check_trials(n_trials)?;
    let mut counts: Vec<usize> = counts
        .into_iter()
        .filter(|&n| n >= stat.min_events())
        .collect();
    counts.sort_unstable();
    counts.dedup();

    let mut tables = BTreeMap::new();
    for n in counts {
        let table_seed = seed::derive(seed, Domain::Calibration, n as u64);
        let statistics = (0..n_trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = seed::stream(table_seed, Domain::Trial, i);
                loop {
                    // a repeated float time is the only way to get no catalog
                    if let Some(c) = uniform_catalog(&mut rng, n, window) {
                        return stat.statistic(&c);
                    }
                }
            })
            .collect::<Result<Vec<_>>>();
        match statistics {
            Ok(s) => {
                tables.insert(n, TailTable::new(s)?);
            }
            Err(e) if e.is_untestable() => {}
            Err(e) => return Err(e),
        }
    }
    Ok(NullCalibration {
        test: stat.test_id(),
        fingerprint: fingerprint_of(stat),
        null_rate: None,
        window,
        trials_per_table: n_trials,
        ties: TieBreak::default(),
        strata: Strata::ByCount(tables),
    })
}

impl NullCalibration {
    pub fn with_ties(mut self, ties: TieBreak) -> Self {
        self.ties = ties;
        self
    }

    pub fn test(&self) -> TestId {
        self.test
    }

    pub fn null_rate(&self) -> Option<f64> {
        self.null_rate
    }

    pub fn window(&self) -> SimulationWindow {
        self.window
    }

    pub fn trials_per_table(&self) -> usize {
        self.trials_per_table
    }

    pub fn stratification(&self) -> Stratification {
        match self.strata {
            Strata::Pooled(_) => Stratification::Pooled,
            Strata::ByCount(_) => Stratification::ByEventCount,
        }
    }

    /// Event counts with a table (empty for pooled calibrations).
    pub fn counts(&self) -> Vec<usize> {
        match &self.strata {
            Strata::Pooled(_) => Vec::new(),
            Strata::ByCount(m) => m.keys().copied().collect(),
        }
    }

    pub fn table(&self, n_events: usize) -> Result<&TailTable> {
        match &self.strata {
            Strata::Pooled(t) => Ok(t),
            Strata::ByCount(m) => m.get(&n_events).ok_or(Error::MissingCalibration(n_events)),
        }
    }

    pub(crate) fn check_compatible<S: CatalogStatistic + ?Sized>(&self, stat: &S) -> Result<()> {
        if self.test != stat.test_id() || self.fingerprint != fingerprint_of(stat) {
            return Err(Error::invalid(
                "calibration",
                "was built for a different test configuration",
            ));
        }
        Ok(())
    }

    /// Calibrated p-value of `statistic` for a catalog of `n_events` events.
    pub fn p_value(&self, statistic: f64, n_events: usize, u: f64) -> Result<f64> {
        Ok(self.table(n_events)?.p_value(statistic, self.ties, u))
    }
}

/// Where a test's p-value comes from.
#[derive(Debug, Clone, Copy)]
pub enum PValueMethod<'a> {
    Analytic,
    MonteCarlo(&'a NullCalibration),
}
