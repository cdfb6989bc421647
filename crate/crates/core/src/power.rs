//! Monte Carlo ensembles: p-value distributions, power at a significance
//! level, parameter sweeps and studies at several hypothesized null rates.
//!
//! Trial `i` of a study always uses the seed derived from
//! `(master_seed, i)`, and every reduction happens after the parallel map in
//! trial order, so results are identical for any worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{
    build_count_conditional_calibration, build_null_calibration, test_chi2_counts,
    test_chi2_inter_n_event, test_ks_interevent, CalibrationKind, CatalogStatistic, Chi2CountsTest,
    InterEventConfig, InterNEventTest, KsIntereventTest, NullCalibration, PValueMethod,
    Stratification, TestId, TestOutcome, TieBreak,
};
use crate::process::{
    mean_rate, ClusterProcessParams, EventCatalog, ProcessModel, RateStatistics, SimulationWindow,
};
use crate::seed::{self, Domain};
use crate::stats::{ks_pvalue_asymptotic, ks_statistic, Histogram};

pub const PVALUE_BINS: usize = 20;

/// Which reference the inter-n-event test bins against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    Erlang,
    #[default]
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "kebab-case")]
pub enum TestConfig {
    Ks(KsIntereventTest),
    Chi2Counts(Chi2CountsTest),
    Chi2InterNEvent {
        config: InterEventConfig,
        reference: ReferenceKind,
        /// Poisson catalogs used to cut simulated reference bins.
        reference_catalogs: usize,
    },
}

impl TestConfig {
    pub fn ks() -> Self {
        TestConfig::Ks(KsIntereventTest::default())
    }

    pub fn chi2_counts() -> Self {
        TestConfig::Chi2Counts(Chi2CountsTest::default())
    }

    pub fn chi2_inter_n_event() -> Self {
        TestConfig::Chi2InterNEvent {
            config: InterEventConfig::default(),
            reference: ReferenceKind::Simulated,
            reference_catalogs: 10_000,
        }
    }

    pub fn id(&self) -> TestId {
        match self {
            TestConfig::Ks(_) => TestId::KsInterevent,
            TestConfig::Chi2Counts(_) => TestId::Chi2Counts,
            TestConfig::Chi2InterNEvent { .. } => TestId::Chi2InterNEvent,
        }
    }

    /// Whether the test needs a hypothesized rate regardless of calibration.
    fn needs_null_rate(&self) -> bool {
        matches!(self, TestConfig::Chi2InterNEvent { .. })
    }
}

/// How the hypothesized Poisson rate is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullRatePolicy {
    /// Mean rate over all catalogs of the ensemble.
    LongTermMean,
    Fixed(f64),
    /// Nearest-rank quantile of the ensemble's per-catalog rates.
    Quantile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UntestablePolicy {
    /// Leave too-sparse catalogs out of the power denominator.
    #[default]
    Exclude,
    /// Count too-sparse catalogs as failures to reject.
    CountAsAccept,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    pub method: CalibrationKind,
    pub stratification: Stratification,
    pub n_trials: usize,
    pub ties: TieBreak,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            method: CalibrationKind::MonteCarlo,
            stratification: Stratification::Pooled,
            n_trials: 99_999,
            ties: TieBreak::Randomized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub process: ProcessModel,
    pub test: TestConfig,
    pub n_trials: usize,
    pub alpha: f64,
    pub master_seed: u64,
    pub null_rate_policy: NullRatePolicy,
    pub calibration: CalibrationSettings,
    pub untestable: UntestablePolicy,
    /// Worker threads; `None` uses the global pool. Never affects results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl PowerConfig {
    pub fn new(process: impl Into<ProcessModel>, test: TestConfig) -> Self {
        Self {
            process: process.into(),
            test,
            n_trials: 10_000,
            alpha: 0.05,
            master_seed: 0,
            null_rate_policy: NullRatePolicy::LongTermMean,
            calibration: CalibrationSettings::default(),
            untestable: UntestablePolicy::default(),
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        if self.n_trials < 100 {
            return Err(Error::invalid("n_trials", "must be at least 100"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", "must lie in (0, 1)"));
        }
        match self.null_rate_policy {
            NullRatePolicy::Fixed(r) if !(r > 0.0 && r.is_finite()) => {
                return Err(Error::invalid("null_rate", "must be positive"))
            }
            NullRatePolicy::Quantile(l) if !(l > 0.0 && l < 1.0) => {
                return Err(Error::invalid(
                    "null_rate",
                    "quantile level must lie in (0, 1)",
                ))
            }
            _ => {}
        }
        if let TestConfig::Chi2InterNEvent {
            config,
            reference_catalogs,
            ..
        } = &self.test
        {
            config.validate()?;
            if *reference_catalogs == 0 {
                return Err(Error::invalid("reference_catalogs", "must be positive"));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueDistribution {
    pub p_values: Vec<f64>,
    pub histogram: Histogram,
    pub n_untestable: usize,
}

impl PValueDistribution {
    pub fn n_trials(&self) -> usize {
        self.p_values.len() + self.n_untestable
    }

    /// Fraction of testable p-values above `threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        let n = self.p_values.iter().filter(|&&p| p > threshold).count();
        n as f64 / self.p_values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub power: f64,
    pub std_error: f64,
    pub alpha: f64,
    pub n_effective: usize,
    pub n_rejected: usize,
}

impl PowerEstimate {
    pub fn from_counts(n_rejected: usize, n_effective: usize, alpha: f64) -> Result<Self> {
        if n_effective == 0 {
            return Err(Error::AllUntestable);
        }
        let power = n_rejected as f64 / n_effective as f64;
        Ok(Self {
            power,
            std_error: (power * (1.0 - power) / n_effective as f64).sqrt(),
            alpha,
            n_effective,
            n_rejected,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStudy {
    pub distribution: PValueDistribution,
    pub estimate: PowerEstimate,
    /// Hypothesized rate, when the test or its calibration used one.
    pub null_rate: Option<f64>,
    pub ensemble_mean_rate: f64,
}

/// Histogram of p-values in twenty 5%-wide bins; `p = 1` falls in the last.
pub fn pvalue_histogram(p_values: &[f64]) -> Result<Histogram> {
    if p_values.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(
            "p_values",
            format!("{p} is not a probability"),
        ));
    }
    let mut h = Histogram::uniform(0.0, 1.0, PVALUE_BINS)?;
    for &p in p_values {
        h.add(p);
    }
    Ok(h)
}

/// Power at the first bin edge (5%) read off a p-value histogram.
pub fn power_from_histogram(h: &Histogram) -> f64 {
    h.counts()[0] as f64 / h.in_range() as f64
}

/// The test with everything that depends on the null rate resolved.
#[derive(Debug, Clone)]
enum PreparedTest {
    Ks(KsIntereventTest),
    Counts(Chi2CountsTest),
    InterN(InterNEventTest),
}

impl PreparedTest {
    fn statistic(&self) -> &dyn CatalogStatistic {
        match self {
            PreparedTest::Ks(t) => t,
            PreparedTest::Counts(t) => t,
            PreparedTest::InterN(t) => t,
        }
    }

    fn run(&self, catalog: &EventCatalog, method: PValueMethod<'_>) -> Result<TestOutcome> {
        match self {
            PreparedTest::Ks(t) => test_ks_interevent(catalog, t, method),
            PreparedTest::Counts(t) => test_chi2_counts(catalog, t, method),
            PreparedTest::InterN(t) => test_chi2_inter_n_event(catalog, t, method),
        }
    }
}

fn prepare(
    test: &TestConfig,
    window: SimulationWindow,
    null_rate: Option<f64>,
    seed: u64,
) -> Result<PreparedTest> {
    Ok(match test {
        TestConfig::Ks(t) => PreparedTest::Ks(*t),
        TestConfig::Chi2Counts(t) => PreparedTest::Counts(*t),
        TestConfig::Chi2InterNEvent {
            config,
            reference,
            reference_catalogs,
        } => {
            let rate = null_rate
                .ok_or_else(|| Error::Config("the inter-n-event test needs a null rate".into()))?;
            PreparedTest::InterN(match reference {
                ReferenceKind::Erlang => InterNEventTest::erlang(*config, rate)?,
                ReferenceKind::Simulated => InterNEventTest::simulated(
                    *config,
                    rate,
                    window,
                    *reference_catalogs,
                    seed::derive(seed, Domain::Reference, 0),
                )?,
            })
        }
    })
}

fn build_calibration(
    test: &PreparedTest,
    settings: &CalibrationSettings,
    window: SimulationWindow,
    null_rate: Option<f64>,
    counts: impl IntoIterator<Item = usize>,
    seed: u64,
) -> Result<Option<NullCalibration>> {
    if settings.method == CalibrationKind::Analytic {
        return Ok(None);
    }
    let calibration_seed = seed::derive(seed, Domain::Calibration, 0);
    let cal = match settings.stratification {
        Stratification::Pooled => build_null_calibration(
            test.statistic(),
            null_rate.expect("pooled calibration resolves a rate"),
            window,
            settings.n_trials,
            calibration_seed,
        )?,
        Stratification::ByEventCount => build_count_conditional_calibration(
            test.statistic(),
            window,
            counts,
            settings.n_trials,
            calibration_seed,
        )?,
    };
    Ok(Some(cal.with_ties(settings.ties)))
}

fn method_of(calibration: &Option<NullCalibration>) -> PValueMethod<'_> {
    match calibration {
        Some(c) => PValueMethod::MonteCarlo(c),
        None => PValueMethod::Analytic,
    }
}

/// Tests a single catalog. Without an explicit `null_rate`, a pooled Monte
/// Carlo calibration simulates at the catalog's own rate; the inter-n-event
/// test always needs one.
pub fn test_catalog(
    catalog: &EventCatalog,
    test: &TestConfig,
    null_rate: Option<f64>,
    calibration: &CalibrationSettings,
    seed: u64,
) -> Result<TestOutcome> {
    if let Some(r) = null_rate {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid("null_rate", "must be positive"));
        }
    }
    let window = catalog.window();
    let prepared = prepare(test, window, null_rate, seed)?;
    // an untestable catalog needs no calibration
    prepared.statistic().statistic(catalog)?;
    let pooled = calibration.method == CalibrationKind::MonteCarlo
        && calibration.stratification == Stratification::Pooled;
    let rate = match null_rate {
        Some(r) => Some(r),
        None if pooled => Some(mean_rate(catalog)),
        None => None,
    };
    let cal = build_calibration(&prepared, calibration, window, rate, [catalog.len()], seed)?;
    prepared.run(catalog, method_of(&cal))
}

fn resolve_null_rate(policy: NullRatePolicy, rates: &[f64]) -> Result<f64> {
    let rate = match policy {
        NullRatePolicy::Fixed(r) => r,
        NullRatePolicy::LongTermMean => rates.iter().sum::<f64>() / rates.len() as f64,
        NullRatePolicy::Quantile(level) => {
            RateStatistics::from_rates(rates, &[level])?.quantiles[0].1
        }
    };
    if rate > 0.0 {
        Ok(rate)
    } else {
        Err(Error::invalid(
            "null_rate",
            "resolved to zero: the ensemble has no events",
        ))
    }
}

/// Runs `f` on a pool of `workers` threads, or the global pool for `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Draws `n_trials` catalogs from the process, tests each, and summarizes the
/// p-values.
pub fn run_power_study(config: &PowerConfig) -> Result<PowerStudy> {
    config.validate()?;
    with_workers(config.workers, || run_power_study_inner(config))?
}

fn run_power_study_inner(config: &PowerConfig) -> Result<PowerStudy> {
    let catalogs: Vec<EventCatalog> = (0..config.n_trials as u64)
        .into_par_iter()
        .map(|i| {
            config
                .process
                .sample(seed::derive(config.master_seed, Domain::Trial, i))
        })
        .collect();
    let rates: Vec<f64> = catalogs.iter().map(mean_rate).collect();
    let ensemble_mean_rate = rates.iter().sum::<f64>() / rates.len() as f64;

    let settings = &config.calibration;
    let stratification = settings.stratification;
    let monte_carlo = settings.method == CalibrationKind::MonteCarlo;
    let needs_rate =
        config.test.needs_null_rate() || (monte_carlo && stratification == Stratification::Pooled);
    let null_rate = if needs_rate {
        Some(resolve_null_rate(config.null_rate_policy, &rates)?)
    } else {
        None
    };

    let window = config.process.window();
    let test = prepare(&config.test, window, null_rate, config.master_seed)?;
    let calibration = build_calibration(
        &test,
        settings,
        window,
        null_rate,
        catalogs.iter().map(EventCatalog::len),
        config.master_seed,
    )?;
    let method = method_of(&calibration);

    let outcomes: Vec<Result<TestOutcome>> =
        catalogs.par_iter().map(|c| test.run(c, method)).collect();

    let mut p_values = Vec::with_capacity(outcomes.len());
    let mut n_untestable = 0;
    for outcome in outcomes {
        match outcome {
            Ok(o) => p_values.push(o.p_value),
            Err(e) if e.is_untestable() => n_untestable += 1,
            Err(e) => return Err(e),
        }
    }
    if p_values.is_empty() {
        return Err(Error::AllUntestable);
    }
    let histogram = pvalue_histogram(&p_values)?;
    let n_rejected = p_values.iter().filter(|&&p| p < config.alpha).count();
    let n_effective = match config.untestable {
        UntestablePolicy::Exclude => p_values.len(),
        UntestablePolicy::CountAsAccept => config.n_trials,
    };
    let estimate = PowerEstimate::from_counts(n_rejected, n_effective, config.alpha)?;
    Ok(PowerStudy {
        distribution: PValueDistribution {
            p_values,
            histogram,
            n_untestable,
        },
        estimate,
        null_rate,
        ensemble_mean_rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub clusters_per_century: f64,
    pub events_per_decade: f64,
    pub estimate: Option<PowerEstimate>,
    pub ensemble_mean_rate: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerGrid {
    pub clusters_axis: Vec<f64>,
    pub events_axis: Vec<f64>,
    /// Row per cluster rate, column per in-cluster event rate.
    pub cells: Vec<Vec<GridCell>>,
}

impl PowerGrid {
    pub fn cell(&self, clusters: f64, events: f64) -> Option<&GridCell> {
        let i = self.clusters_axis.iter().position(|&c| c == clusters)?;
        let j = self.events_axis.iter().position(|&e| e == events)?;
        Some(&self.cells[i][j])
    }

    pub fn iter(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().flatten()
    }
}

/// Power over a grid of cluster onset rates and in-cluster event rates. The
/// base process supplies the remaining parameters; each cell gets its own
/// seed. A failing cell is recorded, not fatal.
pub fn sweep_grid(
    base: &PowerConfig,
    clusters_axis: &[f64],
    events_axis: &[f64],
) -> Result<PowerGrid> {
    if clusters_axis.is_empty() || events_axis.is_empty() {
        return Err(Error::invalid("axes", "must not be empty"));
    }
    let ProcessModel::Clustered(base_params) = base.process else {
        return Err(Error::invalid(
            "process",
            "a sweep needs the clustered process",
        ));
    };
    base.validate()?;
    let mut cells = Vec::with_capacity(clusters_axis.len());
    for (i, &clusters) in clusters_axis.iter().enumerate() {
        let mut row = Vec::with_capacity(events_axis.len());
        for (j, &events) in events_axis.iter().enumerate() {
            let index = (i * events_axis.len() + j) as u64;
            let result = ClusterProcessParams {
                clusters_per_century: clusters,
                in_cluster_events_per_decade: events,
                ..base_params
            }
            .validate()
            .and_then(|()| {
                let config = PowerConfig {
                    process: ProcessModel::Clustered(ClusterProcessParams {
                        clusters_per_century: clusters,
                        in_cluster_events_per_decade: events,
                        ..base_params
                    }),
                    master_seed: seed::derive(base.master_seed, Domain::Cell, index),
                    ..base.clone()
                };
                run_power_study(&config)
            });
            row.push(match result {
                Ok(study) => GridCell {
                    clusters_per_century: clusters,
                    events_per_decade: events,
                    estimate: Some(study.estimate),
                    ensemble_mean_rate: Some(study.ensemble_mean_rate),
                    error: None,
                },
                Err(e) => GridCell {
                    clusters_per_century: clusters,
                    events_per_decade: events,
                    estimate: None,
                    ensemble_mean_rate: None,
                    error: Some(e.to_string()),
                },
            });
        }
        cells.push(row);
    }
    Ok(PowerGrid {
        clusters_axis: clusters_axis.to_vec(),
        events_axis: events_axis.to_vec(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    /// `None` for the long-term mean.
    pub level: Option<f64>,
    pub rate: f64,
    pub study: PowerStudy,
}

/// Runs the configured test at fixed null rates taken from the ensemble's own
/// rate distribution: first its mean, then each requested quantile. All runs
/// share the base seed, hence the same catalogs.
pub fn quantile_rate_study(
    base: &PowerConfig,
    levels: &[f64],
) -> Result<(RateStatistics, Vec<RateStudy>)> {
    base.validate()?;
    let rates: Vec<f64> = with_workers(base.workers, || {
        (0..base.n_trials as u64)
            .into_par_iter()
            .map(|i| {
                mean_rate(
                    &base
                        .process
                        .sample(seed::derive(base.master_seed, Domain::Trial, i)),
                )
            })
            .collect()
    })?;
    let stats = RateStatistics::from_rates(&rates, levels)?;
    let targets = std::iter::once((None, stats.mean_rate))
        .chain(stats.quantiles.iter().map(|&(l, r)| (Some(l), r)));
    let mut studies = Vec::new();
    for (level, rate) in targets {
        let config = PowerConfig {
            null_rate_policy: NullRatePolicy::Fixed(rate),
            ..base.clone()
        };
        studies.push(RateStudy {
            level,
            rate,
            study: run_power_study(&config)?,
        });
    }
    Ok((stats, studies))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityCheck {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

pub const MIN_UNIFORMITY_VALUES: usize = 100;

/// KS test of p-values against `Uniform[0, 1]`.
pub fn uniformity_check(p_values: &[f64]) -> Result<UniformityCheck> {
    if p_values.len() < MIN_UNIFORMITY_VALUES {
        return Err(Error::TooFewValues {
            needed: MIN_UNIFORMITY_VALUES,
            have: p_values.len(),
        });
    }
    let d = ks_statistic(p_values, |x| x.clamp(0.0, 1.0))?;
    Ok(UniformityCheck {
        statistic: d,
        p_value: ks_pvalue_asymptotic(d, p_values.len())?,
        n: p_values.len(),
    })
}
