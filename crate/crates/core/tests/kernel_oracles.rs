//! Numeric kernels against oracles computed here from first principles.

mod common;

use clusterpower::seed::{self, Domain};
use clusterpower::stats::{
    chi2_pvalue, erlang_cdf, exponential_cdf, ks_pvalue_asymptotic, ks_statistic, mle_rate,
    poisson_pmf, poisson_sf, Histogram,
};
use common::*;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn chi2_pvalue_matches_quadrature() {
    let mut worst = 0.0f64;
    for k in 1..=20 {
        for i in 0..=50 {
            let x = i as f64 * 2.0;
            let p = chi2_pvalue(x, k).unwrap();
            let q = chi2_upper_by_quadrature(x, k);
            worst = worst.max((p - q).abs());
            assert!((p - q).abs() < 1e-8, "dof {k} x {x}: {p} vs {q}");
        }
    }
    assert!(worst < 1e-8);
    let p = chi2_pvalue(3.8415, 1).unwrap();
    assert!((p - chi2_upper_by_quadrature(3.8415, 1)).abs() < 1e-8);
    assert!((p - 0.05).abs() < 1e-4);
}

#[test]
fn ks_pvalue_matches_series() {
    assert!((ks_series(1.0) - 0.26999967167735456).abs() < 1e-12);
    for i in 1..=300 {
        let x = i as f64 * 0.01;
        let n = 100;
        let d = x / (n as f64).sqrt();
        let p = ks_pvalue_asymptotic(d, n).unwrap();
        let oracle = kolmogorov_tail(x);
        assert!((p - oracle).abs() < 1e-10, "x {x}: {p} vs {oracle}");
    }
    assert_eq!(ks_pvalue_asymptotic(0.0, 10).unwrap(), 1.0);
    assert!(ks_pvalue_asymptotic(4.0 / 10.0, 100).unwrap() < 1e-10);
}

#[test]
fn erlang_cdf_matches_closed_form() {
    for n in 1..=12 {
        for &rate in &[0.05, 0.12, 0.5, 1.0, 3.0] {
            for i in 0..60 {
                let t = i as f64 * 0.5;
                let a = erlang_cdf(n, rate, t).unwrap();
                let b = erlang_by_poisson_sum(n, rate, t);
                assert!((a - b).abs() < 1e-12, "n {n} rate {rate} t {t}: {a} vs {b}");
            }
        }
    }
    assert!((erlang_cdf(2, 1.0, 2.0).unwrap() - 0.5939941502901619).abs() < 1e-12);
    for i in 0..50 {
        let t = i as f64 * 0.7;
        assert_eq!(
            erlang_cdf(1, 0.3, t).unwrap(),
            exponential_cdf(0.3, t).unwrap()
        );
    }
}

#[test]
fn erlang_cdf_matches_monte_carlo() {
    let draws = 100_000;
    let mut rng = seed::stream(2024, Domain::Trial, 0);
    for &(n, rate, t) in &[(2u32, 1.0, 2.0), (3, 0.12, 20.0), (5, 0.5, 8.0)] {
        let hits = (0..draws)
            .filter(|_| {
                let s: f64 = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln() / rate).sum();
                s <= t
            })
            .count();
        let est = hits as f64 / draws as f64;
        let p = erlang_cdf(n, rate, t).unwrap();
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((est - p).abs() < 3.0 * se, "n {n}: {est} vs {p}");
    }
}

#[test]
fn poisson_pmf_matches_product() {
    for &mean in &[0.03, 0.5, 1.0, 2.0, 13.2, 40.0] {
        let mut total = 0.0;
        for k in 0..200 {
            let p = poisson_pmf(mean, k).unwrap();
            let q = pmf_by_product(mean, k);
            if q > 1e-280 {
                assert!((p - q).abs() <= 1e-12 * q, "mean {mean} k {k}: {p} vs {q}");
            } else {
                assert!(p < 1e-270);
            }
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-12);
        // survival function agrees with the summed mass
        for k in [1u64, 3, 10] {
            let tail: f64 = 1.0 - (0..k).map(|j| pmf_by_product(mean, j)).sum::<f64>();
            assert!((poisson_sf(mean, k).unwrap() - tail).abs() < 1e-12);
        }
    }
    assert!((poisson_pmf(1.0, 0).unwrap() - (-1f64).exp()).abs() < 1e-15);
    assert!((poisson_pmf(2.0, 2).unwrap() - 2.0 * (-2f64).exp()).abs() < 1e-15);
}

fn ks_null_fractions(n: usize, trials: u64) -> Vec<f64> {
    let mut h = Histogram::uniform(0.0, 1.0, 20).unwrap();
    for i in 0..trials {
        let mut rng = seed::stream(77, Domain::Trial, i);
        let sample: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let d = ks_statistic(&sample, |x| x.clamp(0.0, 1.0)).unwrap();
        h.add(ks_pvalue_asymptotic(d, n).unwrap());
    }
    h.fractions()
}

#[test]
fn ks_asymptotic_is_uniform_on_known_nulls() {
    for (i, f) in ks_null_fractions(200, 10_000).iter().enumerate() {
        assert!((f - 0.05).abs() <= 0.01, "n 200 bin {i}: {f}");
    }
}

#[test]
fn ks_asymptotic_at_fifty_is_conservative_only_near_one() {
    // the limiting law overstates large p-values at small n; the top bin
    // holds about 0.07 at n = 50
    let f = ks_null_fractions(50, 10_000);
    for (i, x) in f.iter().enumerate().take(10) {
        assert!((x - 0.05).abs() <= 0.01, "n 50 bin {i}: {x}");
    }
    assert!(f[19] > 0.06 && f[19] < 0.08, "top bin {}", f[19]);
}

#[test]
fn mle_rate_is_consistent() {
    let rate = 0.12;
    let mut rng = seed::stream(5, Domain::Trial, 0);
    let gaps: Vec<f64> = (0..100_000)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln() / rate)
        .collect();
    let est = mle_rate(&gaps).unwrap();
    assert!((est - rate).abs() / rate < 0.02);
    assert_eq!(mle_rate(&[1.0, 2.0, 3.0]).unwrap(), 0.5);
}

proptest! {
    #[test]
    fn cdfs_are_monotone_and_bounded(
        n in 1u32..30,
        rate in 0.001f64..10.0,
        t in 0.0f64..500.0,
        dt in 0.0f64..50.0,
        dof in 1usize..60,
    ) {
        let a = erlang_cdf(n, rate, t).unwrap();
        let b = erlang_cdf(n, rate, t + dt).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && a <= b + 1e-15);
        // more events take longer
        prop_assert!(erlang_cdf(n + 1, rate, t).unwrap() <= a + 1e-15);
        let e1 = exponential_cdf(rate, t).unwrap();
        let e2 = exponential_cdf(rate, t + dt).unwrap();
        prop_assert!((0.0..=1.0).contains(&e1) && e1 <= e2);
        let p1 = chi2_pvalue(t, dof).unwrap();
        let p2 = chi2_pvalue(t + dt, dof).unwrap();
        prop_assert!((0.0..=1.0).contains(&p1) && p2 <= p1 + 1e-15);
    }

    #[test]
    fn ks_pvalue_decreases(d in 0.0f64..1.0, dd in 0.0f64..0.5, n in 1usize..500) {
        let a = ks_pvalue_asymptotic(d, n).unwrap();
        let b = ks_pvalue_asymptotic(d + dd, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&b) && b <= a + 1e-15);
    }
}
