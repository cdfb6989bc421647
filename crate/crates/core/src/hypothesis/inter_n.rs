use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibration::PValueMethod;
use super::gaps::{inter_n_event_times, GapOrder, InterEventConfig};
use super::{catalog_unit, CalibrationKind, CatalogStatistic, NullRate, TestId, TestOutcome};
use crate::error::{Error, Result};
use crate::process::{sample_poisson_catalog, EventCatalog, PoissonParams, SimulationWindow};
use crate::seed::{self, Domain};
use crate::stats::{chi2_pvalue, chi2_statistic, erlang_quantile};

/// Reference law the inter-n-event times are binned against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullReference {
    /// Equal-probability bins of `Erlang(n, null_rate)`, re-cut for each
    /// catalog. Only for a fixed gap order.
    Erlang,
    /// Bins cut at quantiles of the pooled inter-n-event times of simulated
    /// Poisson catalogs in the same window; `probs` are the pooled fractions
    /// per bin.
    Simulated { edges: Vec<f64>, probs: Vec<f64> },
}

/// Pearson test of inter-n-event times against a Poisson process of a given
/// rate. The rate is the hypothesis; it is never estimated from the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterNEventTest {
    config: InterEventConfig,
    null_rate: f64,
    reference: NullReference,
}

impl InterNEventTest {
    pub fn erlang(config: InterEventConfig, null_rate: f64) -> Result<Self> {
        config.validate()?;
        PoissonParams::new(null_rate)?;
        if config.order == GapOrder::All {
            return Err(Error::invalid(
                "order",
                "the analytic Erlang reference needs a fixed gap order",
            ));
        }
        Ok(Self {
            config,
            null_rate,
            reference: NullReference::Erlang,
        })
    }

    /// Builds the reference bins from `n_catalogs` Poisson catalogs at
    /// `null_rate`.
    pub fn simulated(
        config: InterEventConfig,
        null_rate: f64,
        window: SimulationWindow,
        n_catalogs: usize,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let params = PoissonParams::new(null_rate)?;
        if n_catalogs == 0 {
            return Err(Error::invalid("n_catalogs", "must be positive"));
        }
        let per_catalog: Vec<Vec<f64>> = (0..n_catalogs as u64)
            .into_par_iter()
            .map(|i| {
                let c = sample_poisson_catalog(
                    params,
                    window,
                    seed::derive(seed, Domain::Reference, i),
                );
                inter_n_event_times(&c, &config).unwrap_or_default()
            })
            .collect();
        let testable = per_catalog.iter().filter(|g| !g.is_empty()).count();
        let mut pooled: Vec<f64> = per_catalog.into_iter().flatten().collect();
        if testable == 0 || pooled.len() < 2 {
            return Err(Error::invalid(
                "null_rate",
                "simulated null catalogs are too sparse to build reference bins",
            ));
        }
        pooled.sort_by(f64::total_cmp);
        let mean_items = pooled.len() as f64 / testable as f64;
        let k = config.bins.resolve(mean_items).min(pooled.len());

        let mut edges: Vec<f64> = (1..k).map(|i| pooled[i * pooled.len() / k]).collect();
        edges.dedup();
        let mut counts = vec![0usize; edges.len() + 1];
        for &g in &pooled {
            counts[bin_of(&edges, g)] += 1;
        }
        if counts.contains(&0) || counts.len() < 2 {
            return Err(Error::invalid("bins", "reference bins are degenerate"));
        }
        let total = pooled.len() as f64;
        let probs = counts.iter().map(|&c| c as f64 / total).collect();
        Ok(Self {
            config,
            null_rate,
            reference: NullReference::Simulated { edges, probs },
        })
    }

    pub fn config(&self) -> &InterEventConfig {
        &self.config
    }

    pub fn null_rate(&self) -> f64 {
        self.null_rate
    }

    pub fn reference(&self) -> &NullReference {
        &self.reference
    }

    /// `(statistic, bins)`.
    fn evaluate(&self, catalog: &EventCatalog) -> Result<(f64, usize)> {
        let gaps = inter_n_event_times(catalog, &self.config)?;
        let m = gaps.len() as f64;
        let (edges, probs): (Cow<'_, [f64]>, Cow<'_, [f64]>) = match &self.reference {
            NullReference::Simulated { edges, probs } => (edges.into(), probs.into()),
            NullReference::Erlang => {
                let GapOrder::Fixed(n) = self.config.order else {
                    unreachable!("checked at construction")
                };
                let k = self.config.bins.resolve(m);
                let edges = (1..k)
                    .map(|i| erlang_quantile(n, self.null_rate, i as f64 / k as f64))
                    .collect::<Result<Vec<_>>>()?;
                (edges.into(), vec![1.0 / k as f64; k].into())
            }
        };
        let mut observed = vec![0u64; probs.len()];
        for &g in &gaps {
            observed[bin_of(&edges, g)] += 1;
        }
        let expected: Vec<f64> = probs.iter().map(|p| p * m).collect();
        Ok((chi2_statistic(&observed, &expected)?, probs.len()))
    }
}

/// Bins are `(-inf, e0), [e0, e1), ..., [e_last, inf)`.
fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x)
}

impl CatalogStatistic for InterNEventTest {
    fn test_id(&self) -> TestId {
        TestId::Chi2InterNEvent
    }

    fn min_events(&self) -> usize {
        self.config.min_events()
    }

    fn statistic(&self, catalog: &EventCatalog) -> Result<f64> {
        self.evaluate(catalog).map(|(s, _)| s)
    }

    fn fingerprint(&self) -> String {
        format!("{self:?}")
    }
}

pub fn test_chi2_inter_n_event(
    catalog: &EventCatalog,
    test: &InterNEventTest,
    method: PValueMethod<'_>,
) -> Result<TestOutcome> {
    let (statistic, bins) = test.evaluate(catalog)?;
    let dof = bins - 1;
    let (p_value, calibration) = match method {
        PValueMethod::Analytic => (chi2_pvalue(statistic, dof)?, CalibrationKind::Analytic),
        PValueMethod::MonteCarlo(cal) => {
            cal.check_compatible(test)?;
            let u = catalog_unit(catalog, TestId::Chi2InterNEvent);
            (
                cal.p_value(statistic, catalog.len(), u)?,
                CalibrationKind::MonteCarlo,
            )
        }
    };
    Ok(TestOutcome {
        test: TestId::Chi2InterNEvent,
        statistic,
        p_value,
        null_rate: NullRate::Known(test.null_rate),
        n_events: catalog.len(),
        calibration,
        dof: Some(dof),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::BinCount;
    use crate::stats::erlang_cdf;

    fn window() -> SimulationWindow {
        SimulationWindow::default()
    }

    #[test]
    fn erlang_reference_needs_fixed_order() {
        assert!(InterNEventTest::erlang(InterEventConfig::default(), 0.12).is_err());
        assert!(InterNEventTest::erlang(InterEventConfig::fixed(3), 0.0).is_err());
        assert!(InterNEventTest::erlang(InterEventConfig::fixed(3), 0.12).is_ok());
    }

    #[test]
    fn erlang_bins_are_equal_probability() {
        let test = InterNEventTest::erlang(
            InterEventConfig {
                bins: BinCount::Fixed(4),
                ..InterEventConfig::fixed(2)
            },
            0.5,
        )
        .unwrap();
        // place gaps exactly at bin midpoints in probability: one per bin
        let mids: Vec<f64> = (0..4)
            .map(|i| erlang_quantile(2, 0.5, (i as f64 + 0.5) / 4.0).unwrap())
            .collect();
        let mut times = vec![0.0];
        for g in &mids {
            let last = *times.last().unwrap();
            times.push(last + g / 2.0);
            times.push(last + g);
        }
        let c = EventCatalog::new(times, SimulationWindow::new(1000.0).unwrap()).unwrap();
        let (s, k) = test.evaluate(&c).unwrap();
        assert_eq!(k, 4);
        assert!(s.abs() < 1e-12, "statistic {s}");
        assert!((erlang_cdf(2, 0.5, mids[0]).unwrap() - 0.125).abs() < 1e-10);
    }

    #[test]
    fn statistic_depends_only_on_null_rate() {
        let times: Vec<f64> = (0..20).map(|i| (i * i) as f64 * 0.25 + 0.5).collect();
        let c = EventCatalog::new(times, window()).unwrap();
        let a = InterNEventTest::erlang(InterEventConfig::fixed(2), 0.12).unwrap();
        let b = InterNEventTest::erlang(InterEventConfig::fixed(2), 0.3).unwrap();
        let sa = a.statistic(&c).unwrap();
        let sb = b.statistic(&c).unwrap();
        assert_ne!(sa, sb);
        // the same rate gives the same statistic on a re-timed copy with equal gaps
        let shifted: Vec<f64> = c.times().iter().map(|t| t + 0.5).collect();
        let c2 = EventCatalog::new(shifted, window()).unwrap();
        assert!((a.statistic(&c2).unwrap() - sa).abs() < 1e-9);
    }

    #[test]
    fn simulated_reference_is_deterministic() {
        let cfg = InterEventConfig {
            bins: BinCount::Fixed(10),
            ..Default::default()
        };
        let a = InterNEventTest::simulated(cfg, 0.12, window(), 300, 5).unwrap();
        let b = InterNEventTest::simulated(cfg, 0.12, window(), 300, 5).unwrap();
        assert_eq!(a, b);
        let NullReference::Simulated { edges, probs } = a.reference() else {
            panic!("simulated reference expected")
        };
        assert_eq!(edges.len() + 1, probs.len());
        assert_eq!(probs.len(), 10);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn too_few_events() {
        let c = EventCatalog::new(vec![1.0, 2.0, 3.0], window()).unwrap();
        let t = InterNEventTest::erlang(InterEventConfig::fixed(3), 0.12).unwrap();
        assert!(matches!(
            test_chi2_inter_n_event(&c, &t, PValueMethod::Analytic),
            Err(Error::TooFewEvents { needed: 4, have: 3 })
        ));
    }
}
