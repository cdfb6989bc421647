//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Gamma(k/2) for integer k, from Gamma(1/2) = sqrt(pi) and the recurrence.
pub fn half_gamma(k: usize) -> f64 {
    let (mut g, mut a) = if k.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while a < k as f64 / 2.0 {
        g *= a;
        a += 1.0;
    }
    g
}

/// Upper tail of chi-square(k) by Simpson integration of the density after
/// substituting t = u^2, which removes the singularity at zero for k = 1.
pub fn chi2_upper_by_quadrature(x: f64, k: usize) -> f64 {
    let norm = 2.0 / (2f64.powf(k as f64 / 2.0) * half_gamma(k));
    let g = |u: f64| norm * u.powi(k as i32 - 1) * (-u * u / 2.0).exp();
    // the density is negligible beyond u = 40
    let lo = x.sqrt();
    let hi = 40f64.max(lo + 10.0);
    let panels = 40_000;
    let h = (hi - lo) / panels as f64;
    let mut s = g(lo) + g(hi);
    for i in 1..panels {
        s += g(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Kolmogorov tail by the alternating series, summed to 100 terms.
pub fn ks_series(x: f64) -> f64 {
    let mut s = 0.0;
    for k in 1..=100 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        s += sign * (-2.0 * (k * k) as f64 * x * x).exp();
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Kolmogorov tail through the theta-function form, accurate for small x.
pub fn ks_theta(x: f64) -> f64 {
    let mut s = 0.0;
    for k in 1..=100 {
        let m = (2 * k - 1) as f64;
        s += (-m * m * PI * PI / (8.0 * x * x)).exp();
    }
    1.0 - (2.0 * PI).sqrt() / x * s
}

pub fn kolmogorov_tail(x: f64) -> f64 {
    if x < 1.0 {
        ks_theta(x)
    } else {
        ks_series(x)
    }
}

/// Erlang CDF as one minus the Poisson probability of fewer than n events.
pub fn erlang_by_poisson_sum(n: u32, rate: f64, t: f64) -> f64 {
    let m = rate * t;
    let mut term = (-m).exp();
    let mut sum = 0.0;
    for k in 0..n {
        if k > 0 {
            term *= m / k as f64;
        }
        sum += term;
    }
    1.0 - sum
}

pub fn pmf_by_product(mean: f64, k: u64) -> f64 {
    let mut v = (-mean).exp();
    for i in 1..=k {
        v *= mean / i as f64;
    }
    v
}
