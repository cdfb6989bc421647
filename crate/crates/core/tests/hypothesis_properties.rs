use clusterpower::hypothesis::{
    build_null_calibration, inter_n_event_times, test_chi2_inter_n_event, BinCount,
    CalibrationKind, CatalogStatistic, InterEventConfig, InterNEventTest, KsIntereventTest,
    PValueMethod, Stratification, TailTable, TestId, TieBreak,
};
use clusterpower::power::{
    run_power_study, uniformity_check, NullRatePolicy, PowerConfig, TestConfig,
};
use clusterpower::process::{
    sample_poisson_catalog, EventCatalog, PoissonParams, ProcessModel, SimulationWindow,
};
use clusterpower::stats::erlang_cdf;
use clusterpower::Result;
use proptest::prelude::*;

fn window() -> SimulationWindow {
    SimulationWindow::new(110.0).unwrap()
}

fn poisson_config(test: TestConfig) -> PowerConfig {
    let mut c = PowerConfig::new(ProcessModel::poisson(0.12, window()).unwrap(), test);
    c.master_seed = 3;
    c
}

fn assert_null_uniform(config: &PowerConfig) {
    let study = run_power_study(config).unwrap();
    let n = study.distribution.p_values.len() as f64;
    for (lo, _, count) in study.distribution.histogram.bins() {
        let f = count as f64 / n;
        assert!(
            (f - 0.05).abs() <= 0.015,
            "{:?}: bin at {lo} holds {f}",
            config.test.id()
        );
    }
    let u = uniformity_check(&study.distribution.p_values).unwrap();
    assert!(
        u.p_value > 0.01,
        "{:?}: uniformity p {}",
        config.test.id(),
        u.p_value
    );
    // size at alpha
    let se = (0.05 * 0.95 / n).sqrt();
    assert!(
        (study.estimate.power - 0.05).abs() < 3.0 * se,
        "size {}",
        study.estimate.power
    );
}

#[test]
fn ks_is_uniform_under_poisson_null() {
    assert_null_uniform(&poisson_config(TestConfig::ks()));
}

#[test]
fn counts_test_is_uniform_under_poisson_null() {
    assert_null_uniform(&poisson_config(TestConfig::chi2_counts()));
}

#[test]
fn inter_n_test_is_uniform_at_the_true_rate() {
    let mut c = poisson_config(TestConfig::chi2_inter_n_event());
    c.null_rate_policy = NullRatePolicy::Fixed(0.12);
    assert_null_uniform(&c);
}

#[test]
fn analytic_ks_with_estimated_rate_is_conservative() {
    let mut c = poisson_config(TestConfig::ks());
    c.calibration.method = CalibrationKind::Analytic;
    let study = run_power_study(&c).unwrap();
    let n = study.estimate.n_effective as f64;
    assert!(study.estimate.power < 0.05 - 3.0 * (0.05 * 0.95 / n).sqrt());
}

#[test]
fn by_count_calibration_is_uniform_under_poisson_null() {
    let mut c = poisson_config(TestConfig::ks());
    c.calibration.stratification = Stratification::ByEventCount;
    c.calibration.n_trials = 2_000;
    let study = run_power_study(&c).unwrap();
    let u = uniformity_check(&study.distribution.p_values).unwrap();
    assert!(u.p_value > 0.01, "{}", u.p_value);
}

/// A statistic passed through a strictly increasing map.
struct Transformed<S>(S);

impl<S: CatalogStatistic> CatalogStatistic for Transformed<S> {
    fn test_id(&self) -> TestId {
        self.0.test_id()
    }

    fn min_events(&self) -> usize {
        self.0.min_events()
    }

    fn statistic(&self, catalog: &EventCatalog) -> Result<f64> {
        self.0.statistic(catalog).map(|x| x.exp() + x.powi(3))
    }

    fn fingerprint(&self) -> String {
        format!("transformed {}", self.0.fingerprint())
    }
}

#[test]
fn calibrated_pvalues_ignore_monotone_transforms() {
    let base = KsIntereventTest::default();
    let wrapped = Transformed(base);
    let a = build_null_calibration(&base, 0.12, window(), 1_000, 8).unwrap();
    let b = build_null_calibration(&wrapped, 0.12, window(), 1_000, 8).unwrap();
    let params = PoissonParams::new(0.2).unwrap();
    let mut checked = 0;
    for seed in 0..300 {
        let c = sample_poisson_catalog(params, window(), seed);
        let (Ok(s), Ok(t)) = (base.statistic(&c), wrapped.statistic(&c)) else {
            continue;
        };
        for u in [0.0, 0.37, 0.99] {
            assert_eq!(
                a.p_value(s, c.len(), u).unwrap(),
                b.p_value(t, c.len(), u).unwrap()
            );
        }
        checked += 1;
    }
    assert!(checked > 250);
}

/// Chi-square statistic over equal-probability Erlang bins, computed from
/// the CDF rather than from quantiles.
fn erlang_chi2(gaps: &[f64], n: u32, rate: f64, k: usize) -> f64 {
    let mut observed = vec![0.0; k];
    for &g in gaps {
        let u = erlang_cdf(n, rate, g).unwrap();
        observed[((u * k as f64).floor() as usize).min(k - 1)] += 1.0;
    }
    let e = gaps.len() as f64 / k as f64;
    observed.iter().map(|o| (o - e) * (o - e) / e).sum()
}

#[test]
fn inter_n_statistic_depends_only_on_stated_rate() {
    let config = InterEventConfig {
        bins: BinCount::Fixed(4),
        ..InterEventConfig::fixed(3)
    };
    let times = sample_poisson_catalog(PoissonParams::new(0.3).unwrap(), window(), 21).into_times();
    let short = EventCatalog::new(times.clone(), window()).unwrap();
    // same events in a longer window: the catalog's own rate drops by half
    let long = EventCatalog::new(times, SimulationWindow::new(220.0).unwrap()).unwrap();
    let gaps = inter_n_event_times(&short, &config).unwrap();

    let mut seen = Vec::new();
    for rate in [0.12, 0.2, 0.3] {
        let test = InterNEventTest::erlang(config, rate).unwrap();
        let a = test_chi2_inter_n_event(&short, &test, PValueMethod::Analytic).unwrap();
        let b = test_chi2_inter_n_event(&long, &test, PValueMethod::Analytic).unwrap();
        assert_eq!(a.statistic, b.statistic);
        assert_eq!(a.p_value, b.p_value);
        assert_eq!(a.dof, Some(3));
        let oracle = erlang_chi2(&gaps, 3, rate, 4);
        assert!(
            (a.statistic - oracle).abs() < 1e-9,
            "{} vs {oracle}",
            a.statistic
        );
        seen.push(a.statistic);
    }
    assert!(seen[0] != seen[1] && seen[1] != seen[2]);
}

proptest! {
    #[test]
    fn tail_table_is_invariant_under_monotone_maps(
        values in prop::collection::vec(-50.0f64..50.0, 1..200),
        probe in -60.0f64..60.0,
        u in 0.0f64..1.0,
        scale in 0.01f64..100.0,
        shift in -100.0f64..100.0,
    ) {
        let f = |x: f64| scale * (x / 10.0).tanh() + x * 1e-3 + shift;
        let a = TailTable::new(values.clone()).unwrap();
        let b = TailTable::new(values.iter().map(|&x| f(x)).collect()).unwrap();
        for ties in [TieBreak::Conservative, TieBreak::Randomized] {
            prop_assert_eq!(a.p_value(probe, ties, u), b.p_value(f(probe), ties, u));
        }
        // ties only among the table itself
        let on = values[0];
        prop_assert_eq!(
            a.p_value(on, TieBreak::Conservative, u),
            b.p_value(f(on), TieBreak::Conservative, u)
        );
    }

    #[test]
    fn tail_pvalues_are_valid(values in prop::collection::vec(0.0f64..10.0, 1..100), s in 0.0f64..12.0, u in 0.0f64..1.0) {
        let t = TailTable::new(values.clone()).unwrap();
        let n = values.len() as f64;
        let c = t.p_value(s, TieBreak::Conservative, u);
        let r = t.p_value(s, TieBreak::Randomized, u);
        prop_assert!(c >= 1.0 / (n + 1.0) && c <= 1.0);
        prop_assert!(r <= c + 1e-15);
        let ge = values.iter().filter(|&&v| v >= s).count() as f64;
        prop_assert_eq!(c, (1.0 + ge) / (n + 1.0));
    }
}
