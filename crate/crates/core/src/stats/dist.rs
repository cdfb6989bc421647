use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "rate",
            format!("must be positive and finite, got {rate}"),
        ))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "t",
            format!("must be non-negative, got {t}"),
        ))
    }
}

/// `1 - exp(-rate * t)`.
pub fn exponential_cdf(rate: f64, t: f64) -> Result<f64> {
    check_rate(rate)?;
    check_time(t)?;
    Ok(-(-rate * t).exp_m1())
}

/// `exp(-rate * t)`, the probability of no event within `t`.
pub fn exponential_sf(rate: f64, t: f64) -> Result<f64> {
    check_rate(rate)?;
    check_time(t)?;
    Ok((-rate * t).exp())
}

/// CDF of the waiting time to the `shape`-th event of a Poisson process.
pub fn erlang_cdf(shape: u32, rate: f64, t: f64) -> Result<f64> {
    if shape == 0 {
        return Err(Error::invalid("shape", "must be at least 1"));
    }
    check_rate(rate)?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if shape == 1 {
        return exponential_cdf(rate, t);
    }
    if t.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_lr(shape as f64, rate * t).clamp(0.0, 1.0))
}

/// Inverse of [`erlang_cdf`] for `p` in `[0, 1)`.
pub fn erlang_quantile(shape: u32, rate: f64, p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1), got {p}")));
    }
    // validates shape and rate
    erlang_cdf(shape, rate, 0.0)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    if shape == 1 {
        return Ok(-(-p).ln_1p() / rate);
    }
    let mut lo = 0.0;
    let mut hi = shape as f64 / rate;
    while erlang_cdf(shape, rate, hi)? < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if erlang_cdf(shape, rate, mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `exp(-mean) * mean^k / k!`, evaluated in log space.
pub fn poisson_pmf(mean: f64, k: u64) -> Result<f64> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::invalid(
            "mean",
            format!("must be positive and finite, got {mean}"),
        ));
    }
    let ln = -mean + k as f64 * mean.ln() - ln_factorial(k);
    Ok(ln.exp())
}

/// `P(X >= k)` for `X ~ Poisson(mean)`.
pub fn poisson_sf(mean: f64, k: u64) -> Result<f64> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::invalid(
            "mean",
            format!("must be positive and finite, got {mean}"),
        ));
    }
    if k == 0 {
        return Ok(1.0);
    }
    // P(X >= k) = P(Gamma(k, 1) <= mean)
    Ok(gamma_lr(k as f64, mean).clamp(0.0, 1.0))
}

/// Maximum-likelihood rate of an exponential sample: the reciprocal mean gap.
pub fn mle_rate(gaps: &[f64]) -> Result<f64> {
    if gaps.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(&g) = gaps.iter().find(|g| !(**g > 0.0)) {
        return Err(Error::NonPositiveGap(g));
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    Ok(1.0 / mean)
}
