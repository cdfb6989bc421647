use clusterpower::process::{
    mean_rate, rate_statistics, sample_cluster_onsets, sample_clustered_catalog,
    sample_events_in_layout, sample_poisson_catalog, ClusterLayout, ClusterProcessParams, Interval,
    OnsetRule, PoissonParams, ProcessModel, SimulationWindow,
};
use clusterpower::stats::{
    chi2_pvalue, chi2_statistic, exponential_cdf, ks_pvalue_asymptotic, ks_statistic,
};
use proptest::prelude::*;

fn window() -> SimulationWindow {
    SimulationWindow::new(110.0).unwrap()
}

/// Pearson test of observed counts against Poisson(mean), tail merged so
/// every category expects at least five.
fn poisson_count_pvalue(counts: &[usize], mean: f64) -> f64 {
    let n = counts.len() as f64;
    let max = *counts.iter().max().unwrap();
    let mut pmf = vec![(-mean).exp()];
    for k in 1..=max + 1 {
        let prev = pmf[k - 1];
        pmf.push(prev * mean / k as f64);
    }
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o, mut e) = (0u64, 0.0);
    let mut cum = 0.0;
    for (k, &p) in pmf.iter().enumerate().take(max + 1) {
        o += counts.iter().filter(|&&c| c == k).count() as u64;
        e += p * n;
        cum += p;
        if e >= 5.0 && (1.0 - cum) * n >= 5.0 {
            obs.push(o);
            exp.push(e);
            o = 0;
            e = 0.0;
        }
    }
    // everything left, including the unbounded tail
    obs.push(o);
    exp.push(e + (1.0 - cum) * n);
    let x = chi2_statistic(&obs, &exp).unwrap();
    chi2_pvalue(x, obs.len() - 1).unwrap()
}

#[test]
fn poisson_counts_follow_poisson_law() {
    let params = PoissonParams::new(0.12).unwrap();
    let counts: Vec<usize> = (0..10_000)
        .map(|i| sample_poisson_catalog(params, window(), i).len())
        .collect();
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    assert!((mean - 13.2).abs() < 0.1, "mean count {mean}");
    let p = poisson_count_pvalue(&counts, 13.2);
    assert!(p > 0.01, "count law p = {p}");
}

#[test]
fn poisson_gaps_are_exponential() {
    let rate = 0.12;
    let long = SimulationWindow::new(50_000.0).unwrap();
    let c = sample_poisson_catalog(PoissonParams::new(rate).unwrap(), long, 9);
    let gaps: Vec<f64> = c.times().windows(2).map(|w| w[1] - w[0]).collect();
    let d = ks_statistic(&gaps, |t| exponential_cdf(rate, t).unwrap()).unwrap();
    let p = ks_pvalue_asymptotic(d, gaps.len()).unwrap();
    assert!(p > 0.01, "gap KS p = {p}");
}

#[test]
fn poisson_times_are_uniform_given_count() {
    let params = PoissonParams::new(0.12).unwrap();
    let mut pooled = Vec::new();
    for i in 0..2_000 {
        pooled.extend(
            sample_poisson_catalog(params, window(), i)
                .times()
                .iter()
                .map(|t| t / 110.0),
        );
    }
    let d = ks_statistic(&pooled, |u| u.clamp(0.0, 1.0)).unwrap();
    let p = ks_pvalue_asymptotic(d, pooled.len()).unwrap();
    assert!(p > 0.01, "uniformity p = {p}");
}

#[test]
fn sampling_is_deterministic() {
    let p = ClusterProcessParams::new(3.0, 4.0).unwrap();
    for seed in [0u64, 1, 42, u64::MAX] {
        assert_eq!(
            sample_clustered_catalog(&p, seed),
            sample_clustered_catalog(&p, seed)
        );
        let m = ProcessModel::poisson(0.12, window()).unwrap();
        assert_eq!(m.sample(seed), m.sample(seed));
    }
    assert_ne!(
        sample_clustered_catalog(&p, 1),
        sample_clustered_catalog(&p, 2)
    );
}

#[test]
fn layouts_are_disjoint_and_clipped() {
    for rule in [OnsetRule::Reject, OnsetRule::Defer] {
        let p = ClusterProcessParams::new(5.0, 5.0)
            .unwrap()
            .with_onset_rule(rule);
        for seed in 0..10_000u64 {
            let layout = sample_cluster_onsets(&p, seed);
            let ivs = layout.intervals();
            for iv in ivs {
                assert!(iv.start >= 0.0 && iv.start < iv.end && iv.end <= 110.0);
                assert!(iv.duration() <= 15.0 + 1e-9);
                // only the last cluster may be clipped
                if iv.end < 110.0 {
                    assert!((iv.duration() - 15.0).abs() < 1e-9);
                }
            }
            for w in ivs.windows(2) {
                assert!(w[1].start >= w[0].end);
            }
            // revalidates through the public constructor
            ClusterLayout::new(ivs.to_vec(), p.window).unwrap();
        }
    }
}

#[test]
fn single_forced_cluster_has_expected_count() {
    let layout = ClusterLayout::new(
        vec![Interval {
            start: 40.0,
            end: 55.0,
        }],
        window(),
    )
    .unwrap();
    let trials = 10_000;
    let mut total = 0usize;
    for seed in 0..trials {
        let c = sample_events_in_layout(&layout, 0.4, window(), seed).unwrap();
        assert!(c.times().iter().all(|&t| (40.0..55.0).contains(&t)));
        total += c.len();
    }
    let mean = total as f64 / trials as f64;
    let se = (6.0 / trials as f64).sqrt();
    assert!((mean - 6.0).abs() < 3.0 * se, "mean {mean}");
}

#[test]
fn mean_rate_grows_with_both_parameters() {
    let levels = [0.5];
    let stat = |c: f64, e: f64| {
        let m = ProcessModel::from(ClusterProcessParams::new(c, e).unwrap());
        rate_statistics(&m, 4_000, &levels, 11).unwrap().mean_rate
    };
    let mut prev_row: Option<Vec<f64>> = None;
    for c in [2.0, 3.0, 4.0, 5.0] {
        let row: Vec<f64> = [2.0, 3.0, 4.0, 5.0].iter().map(|&e| stat(c, e)).collect();
        assert!(row.windows(2).all(|w| w[1] > w[0]), "{row:?}");
        if let Some(prev) = &prev_row {
            assert!(
                prev.iter().zip(&row).all(|(a, b)| b > a),
                "{prev:?} {row:?}"
            );
        }
        prev_row = Some(row);
    }
}

#[test]
fn poisson_model_mean_rate_matches_its_rate() {
    let m = ProcessModel::poisson(0.12, window()).unwrap();
    let s = rate_statistics(&m, 10_000, &[0.5], 3).unwrap();
    let se = (0.12 / 110.0 / 10_000.0f64).sqrt();
    assert!((s.mean_rate - 0.12).abs() < 4.0 * se, "{}", s.mean_rate);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn clustered_catalog_invariants(
        clusters in 0.5f64..10.0,
        events in 0.5f64..20.0,
        duration in 1.0f64..30.0,
        defer in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let rule = if defer { OnsetRule::Defer } else { OnsetRule::Reject };
        let p = ClusterProcessParams::new(clusters, events).unwrap()
            .with_duration(duration).unwrap()
            .with_onset_rule(rule);
        let c = sample_clustered_catalog(&p, seed);
        let layout = sample_cluster_onsets(&p, seed);
        prop_assert!(c.times().windows(2).all(|w| w[0] < w[1]));
        for &t in c.times() {
            prop_assert!((0.0..110.0).contains(&t));
            prop_assert!(layout.intervals().iter().any(|iv| iv.start <= t && t < iv.end));
        }
        prop_assert!(layout.covered_years() <= 110.0 + 1e-9);
        prop_assert!((mean_rate(&c) - c.len() as f64 / 110.0).abs() < 1e-15);
        let again = sample_events_in_layout(&layout, p.in_cluster_rate(), p.window, seed).unwrap();
        prop_assert_eq!(again, c);
    }

    #[test]
    fn poisson_catalog_invariants(rate in 0.001f64..5.0, len in 1.0f64..500.0, seed in any::<u64>()) {
        let w = SimulationWindow::new(len).unwrap();
        let c = sample_poisson_catalog(PoissonParams::new(rate).unwrap(), w, seed);
        prop_assert!(c.times().windows(2).all(|p| p[0] < p[1]));
        prop_assert!(c.times().iter().all(|&t| w.contains(t)));
    }
}
