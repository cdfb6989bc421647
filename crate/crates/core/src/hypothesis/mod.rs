//! The three Poisson-null tests and their Monte Carlo calibration.
//!
//! * [`KsIntereventTest`] compares inter-event times with an exponential law
//!   whose rate is re-estimated from each catalog.
//! * [`Chi2CountsTest`] compares per-bin event counts with a Poisson law of
//!   the catalog's own mean.
//! * [`InterNEventTest`] compares inter-n-event times with their law under a
//!   Poisson process of a stated, known rate.

mod calibration;
mod counts;
mod gaps;
mod inter_n;
mod ks;

use serde::{Deserialize, Serialize};

pub use calibration::{
    build_count_conditional_calibration, build_null_calibration, NullCalibration, PValueMethod,
    Stratification, TailTable, TieBreak,
};
pub use counts::{count_categories, test_chi2_counts, Chi2CountsTest, CountCategories};
pub use gaps::{
    inter_event_times, inter_n_event_times, BinCount, GapOrder, InterEventConfig, Overlap,
};
pub use inter_n::{test_chi2_inter_n_event, InterNEventTest, NullReference};
pub use ks::{test_ks_interevent, KsIntereventTest};

use crate::error::Result;
use crate::process::EventCatalog;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestId {
    /// KS test of inter-event times against an exponential law.
    KsInterevent,
    /// Pearson test of binned event counts against a Poisson law.
    Chi2Counts,
    /// Pearson test of inter-n-event times against a known-rate Poisson null.
    Chi2InterNEvent,
}

impl TestId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestId::KsInterevent => "ks-interevent",
            TestId::Chi2Counts => "chi2-counts",
            TestId::Chi2InterNEvent => "chi2-inter-n-event",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationKind {
    Analytic,
    MonteCarlo,
}

/// The null rate a test used, and whether it came from the catalog itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullRate {
    Known(f64),
    Estimated(f64),
}

impl NullRate {
    pub fn value(&self) -> f64 {
        match *self {
            NullRate::Known(r) | NullRate::Estimated(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test: TestId,
    pub statistic: f64,
    pub p_value: f64,
    pub null_rate: NullRate,
    pub n_events: usize,
    pub calibration: CalibrationKind,
    /// Degrees of freedom of the analytic reference law, where there is one.
    pub dof: Option<usize>,
}

/// A scalar goodness-of-fit statistic of a catalog. Larger means further
/// from the null.
pub trait CatalogStatistic: Sync {
    fn test_id(&self) -> TestId;

    /// Smallest catalog the statistic is defined for.
    fn min_events(&self) -> usize;

    fn statistic(&self, catalog: &EventCatalog) -> Result<f64>;

    /// Identifies the configuration, so a calibration built for one setup is
    /// not applied to another.
    fn fingerprint(&self) -> String;
}

/// Reproducible tie-breaking draw for a catalog.
pub(crate) fn catalog_unit(catalog: &EventCatalog, test: TestId) -> f64 {
    seed::unit_from_bits(
        std::iter::once(test as u64 + 1)
            .chain(std::iter::once(catalog.window().length_years().to_bits()))
            .chain(catalog.times().iter().map(|t| t.to_bits())),
    )
}
