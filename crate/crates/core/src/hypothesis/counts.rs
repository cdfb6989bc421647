use serde::{Deserialize, Serialize};

use super::calibration::PValueMethod;
use super::{catalog_unit, CalibrationKind, CatalogStatistic, NullRate, TestId, TestOutcome};
use crate::error::{Error, Result};
use crate::process::EventCatalog;
use crate::stats::{chi2_pvalue, chi2_statistic, poisson_pmf, poisson_sf};

/// Smallest expected frequency allowed in a merged category.
const MIN_EXPECTED: f64 = 5.0;
const MIN_TIME_BINS: usize = 10;

/// Pearson test of the histogram of per-bin event counts against a Poisson
/// law whose mean is estimated from the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chi2CountsTest {
    pub bin_width_years: f64,
}

impl Default for Chi2CountsTest {
    fn default() -> Self {
        Self {
            bin_width_years: 0.25,
        }
    }
}

/// Merged count categories of a catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCategories {
    /// Number of time bins in each merged category.
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    /// First count value of each merged category.
    pub lower_counts: Vec<u64>,
    pub n_time_bins: usize,
    /// Events inside the binned span.
    pub n_events: usize,
    pub mean_per_bin: f64,
}

impl CountCategories {
    /// One for normalization and one for the estimated mean.
    pub fn dof(&self) -> Option<usize> {
        self.observed.len().checked_sub(2).filter(|&d| d > 0)
    }
}

/// Histograms the per-bin counts into categories `0, 1, 2, ...`, then merges
/// neighbours left to right until every category expects at least five bins;
/// a short remainder joins the last category.
pub fn count_categories(catalog: &EventCatalog, bin_width_years: f64) -> Result<CountCategories> {
    if !(bin_width_years > 0.0 && bin_width_years.is_finite()) {
        return Err(Error::invalid(
            "bin_width_years",
            "must be positive and finite",
        ));
    }
    let length = catalog.window().length_years();
    let n_bins = (length / bin_width_years + 1e-9).floor() as usize;
    if n_bins < MIN_TIME_BINS {
        return Err(Error::invalid(
            "bin_width_years",
            format!("window holds {n_bins} bins, need at least {MIN_TIME_BINS}"),
        ));
    }

    let mut per_bin = vec![0u64; n_bins];
    for &t in catalog.times() {
        let i = (t / bin_width_years).floor() as usize;
        // events in a trailing partial bin are not binned
        if i < n_bins {
            per_bin[i] += 1;
        }
    }
    let n_events = per_bin.iter().sum::<u64>() as usize;
    if n_events == 0 {
        return Err(Error::DegenerateCategories("no events to bin".into()));
    }
    let mean = n_events as f64 / n_bins as f64;
    let max_count = *per_bin.iter().max().unwrap();
    let tail_from = (max_count + 1).max((mean + 8.0 * mean.sqrt()).ceil() as u64 + 2);

    let mut observed = vec![0u64; tail_from as usize + 1];
    for &c in &per_bin {
        observed[c as usize] += 1;
    }
    let scale = n_bins as f64;
    let mut expected = (0..tail_from)
        .map(|k| poisson_pmf(mean, k).map(|p| p * scale))
        .collect::<Result<Vec<_>>>()?;
    expected.push(poisson_sf(mean, tail_from)? * scale);

    let (mut obs_m, mut exp_m, mut lower) = (Vec::new(), Vec::new(), Vec::new());
    let (mut o_acc, mut e_acc, mut start) = (0u64, 0.0, 0u64);
    for (k, (&o, &e)) in observed.iter().zip(&expected).enumerate() {
        o_acc += o;
        e_acc += e;
        if e_acc >= MIN_EXPECTED {
            obs_m.push(o_acc);
            exp_m.push(e_acc);
            lower.push(start);
            o_acc = 0;
            e_acc = 0.0;
            start = k as u64 + 1;
        }
    }
    if e_acc > 0.0 || o_acc > 0 {
        match (obs_m.last_mut(), exp_m.last_mut()) {
            (Some(o), Some(e)) => {
                *o += o_acc;
                *e += e_acc;
            }
            _ => {
                obs_m.push(o_acc);
                exp_m.push(e_acc);
                lower.push(start);
            }
        }
    }
    if obs_m.len() < 2 {
        return Err(Error::DegenerateCategories(format!(
            "{} category left after merging to expected >= {MIN_EXPECTED}",
            obs_m.len()
        )));
    }
    Ok(CountCategories {
        observed: obs_m,
        expected: exp_m,
        lower_counts: lower,
        n_time_bins: n_bins,
        n_events,
        mean_per_bin: mean,
    })
}

impl Chi2CountsTest {
    pub fn new(bin_width_years: f64) -> Result<Self> {
        if !(bin_width_years > 0.0 && bin_width_years.is_finite()) {
            return Err(Error::invalid(
                "bin_width_years",
                "must be positive and finite",
            ));
        }
        Ok(Self { bin_width_years })
    }
}

impl CatalogStatistic for Chi2CountsTest {
    fn test_id(&self) -> TestId {
        TestId::Chi2Counts
    }

    fn min_events(&self) -> usize {
        1
    }

    fn statistic(&self, catalog: &EventCatalog) -> Result<f64> {
        let cats = count_categories(catalog, self.bin_width_years)?;
        chi2_statistic(&cats.observed, &cats.expected)
    }

    fn fingerprint(&self) -> String {
        format!("{self:?}")
    }
}

pub fn test_chi2_counts(
    catalog: &EventCatalog,
    test: &Chi2CountsTest,
    method: PValueMethod<'_>,
) -> Result<TestOutcome> {
    let cats = count_categories(catalog, test.bin_width_years)?;
    let statistic = chi2_statistic(&cats.observed, &cats.expected)?;
    let dof = cats.dof();
    let (p_value, calibration) = match method {
        PValueMethod::Analytic => {
            let dof = dof.ok_or_else(|| {
                Error::DegenerateCategories(format!(
                    "{} categories leave no degrees of freedom for an analytic p-value",
                    cats.observed.len()
                ))
            })?;
            (chi2_pvalue(statistic, dof)?, CalibrationKind::Analytic)
        }
        PValueMethod::MonteCarlo(cal) => {
            cal.check_compatible(test)?;
            let u = catalog_unit(catalog, TestId::Chi2Counts);
            (
                cal.p_value(statistic, catalog.len(), u)?,
                CalibrationKind::MonteCarlo,
            )
        }
    };
    let span = cats.n_time_bins as f64 * test.bin_width_years;
    Ok(TestOutcome {
        test: TestId::Chi2Counts,
        statistic,
        p_value,
        null_rate: NullRate::Estimated(cats.n_events as f64 / span),
        n_events: catalog.len(),
        calibration,
        dof,
    })
}
