use serde::{Deserialize, Serialize};

use super::calibration::PValueMethod;
use super::gaps::inter_event_times;
use super::{catalog_unit, CalibrationKind, CatalogStatistic, NullRate, TestId, TestOutcome};
use crate::error::{Error, Result};
use crate::process::EventCatalog;
use crate::stats::{ks_pvalue, ks_statistics, mle_rate, KsAlternative};

/// KS test of inter-event times against `Exponential(rate)`, with the rate
/// re-estimated from each catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsIntereventTest {
    pub min_events: usize,
    #[serde(default)]
    pub alternative: KsAlternative,
}

impl Default for KsIntereventTest {
    fn default() -> Self {
        Self {
            min_events: 3,
            alternative: KsAlternative::TwoSided,
        }
    }
}

impl KsIntereventTest {
    fn check(&self, catalog: &EventCatalog) -> Result<()> {
        // below three events the estimated-rate statistic is a constant
        let needed = self.min_events.max(3);
        if catalog.len() < needed {
            return Err(Error::TooFewEvents {
                needed,
                have: catalog.len(),
            });
        }
        Ok(())
    }

    /// `(statistic, estimated rate, number of gaps)`.
    fn evaluate(&self, catalog: &EventCatalog) -> Result<(f64, f64, usize)> {
        self.check(catalog)?;
        let gaps = inter_event_times(catalog)?;
        let rate = mle_rate(&gaps)?;
        let stats = ks_statistics(&gaps, |t| -(-rate * t).exp_m1())?;
        Ok((stats.get(self.alternative), rate, gaps.len()))
    }
}

impl CatalogStatistic for KsIntereventTest {
    fn test_id(&self) -> TestId {
        TestId::KsInterevent
    }

    fn min_events(&self) -> usize {
        self.min_events.max(3)
    }

    fn statistic(&self, catalog: &EventCatalog) -> Result<f64> {
        self.evaluate(catalog).map(|(d, _, _)| d)
    }

    fn fingerprint(&self) -> String {
        format!("{self:?}")
    }
}

pub fn test_ks_interevent(
    catalog: &EventCatalog,
    test: &KsIntereventTest,
    method: PValueMethod<'_>,
) -> Result<TestOutcome> {
    let (d, rate, n_gaps) = test.evaluate(catalog)?;
    let (p_value, calibration) = match method {
        PValueMethod::Analytic => (
            ks_pvalue(d, n_gaps, test.alternative)?,
            CalibrationKind::Analytic,
        ),
        PValueMethod::MonteCarlo(cal) => {
            cal.check_compatible(test)?;
            let u = catalog_unit(catalog, TestId::KsInterevent);
            (
                cal.p_value(d, catalog.len(), u)?,
                CalibrationKind::MonteCarlo,
            )
        }
    };
    Ok(TestOutcome {
        test: TestId::KsInterevent,
        statistic: d,
        p_value,
        null_rate: NullRate::Estimated(rate),
        n_events: catalog.len(),
        calibration,
        dof: None,
    })
}
