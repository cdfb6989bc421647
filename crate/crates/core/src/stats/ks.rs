use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which departure from the null the KS statistic measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KsAlternative {
    #[default]
    TwoSided,
    /// Empirical CDF above the null (`D+`).
    Greater,
    /// Empirical CDF below the null (`D-`).
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsStatistics {
    pub d_plus: f64,
    pub d_minus: f64,
    pub n: usize,
}

impl KsStatistics {
    pub fn two_sided(&self) -> f64 {
        self.d_plus.max(self.d_minus)
    }

    pub fn get(&self, alternative: KsAlternative) -> f64 {
        match alternative {
            KsAlternative::TwoSided => self.two_sided(),
            KsAlternative::Greater => self.d_plus,
            KsAlternative::Less => self.d_minus,
        }
    }
}

/// Both one-sided suprema of `F_emp - F_null`, evaluated at the sample points.
pub fn ks_statistics<F>(sample: &[f64], null_cdf: F) -> Result<KsStatistics>
where
    F: Fn(f64) -> f64,
{
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("sample", "contains NaN"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let (mut d_plus, mut d_minus) = (0.0_f64, 0.0_f64);
    for (i, &x) in sorted.iter().enumerate() {
        let f = null_cdf(x);
        d_plus = d_plus.max((i + 1) as f64 / n - f);
        d_minus = d_minus.max(f - i as f64 / n);
    }
    Ok(KsStatistics {
        d_plus,
        d_minus,
        n: sorted.len(),
    })
}

/// Two-sided statistic `sup |F_emp - F_null|`.
pub fn ks_statistic<F>(sample: &[f64], null_cdf: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    ks_statistics(sample, null_cdf).map(|s| s.two_sided())
}

const SERIES_TOL: f64 = 1e-12;
const SERIES_MAX_TERMS: usize = 100_000;

/// Limiting Kolmogorov tail `Q(x) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)`.
fn kolmogorov_q(x: f64) -> f64 {
    // Q(x) differs from 1 by less than 1e-30 here and the alternating series
    // converges slowly.
    if x < 0.1 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=SERIES_MAX_TERMS {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += sign * term;
        if term < SERIES_TOL {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic two-sided p-value `Q(sqrt(n) * d)`.
pub fn ks_pvalue_asymptotic(d: f64, n: usize) -> Result<f64> {
    check(d, n)?;
    Ok(kolmogorov_q((n as f64).sqrt() * d))
}

/// Asymptotic one-sided p-value `exp(-2 n d^2)`.
pub fn ks_pvalue_one_sided_asymptotic(d: f64, n: usize) -> Result<f64> {
    check(d, n)?;
    Ok((-2.0 * n as f64 * d * d).exp().clamp(0.0, 1.0))
}

pub fn ks_pvalue(d: f64, n: usize, alternative: KsAlternative) -> Result<f64> {
    match alternative {
        KsAlternative::TwoSided => ks_pvalue_asymptotic(d, n),
        KsAlternative::Greater | KsAlternative::Less => ks_pvalue_one_sided_asymptotic(d, n),
    }
}

fn check(d: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(d >= 0.0) {
        return Err(Error::invalid(
            "d",
            format!("must be non-negative, got {d}"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{erlang_quantile, exponential_cdf};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Jacobi-theta form of the Kolmogorov tail, used as an independent
    /// route for the alternating series.
    fn q_theta(x: f64) -> f64 {
        let s: f64 = (1..200)
            .map(|k| {
                let j = (2 * k - 1) as f64;
                (-j * j * PI * PI / (8.0 * x * x)).exp()
            })
            .sum();
        1.0 - (2.0 * PI).sqrt() / x * s
    }

    #[test]
    fn single_point_against_unit_exponential() {
        let d = ks_statistic(&[1.0], |t| exponential_cdf(1.0, t).unwrap()).unwrap();
        assert_abs_diff_eq!(d, 1.0 - (-1f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(d, 0.632_120_558_8, epsilon = 1e-9);
    }

    #[test]
    fn quantile_midpoints_give_half_step() {
        for n in [1usize, 2, 5, 17, 100] {
            let sample: Vec<f64> = (0..n)
                .map(|i| erlang_quantile(1, 1.0, (i as f64 + 0.5) / n as f64).unwrap())
                .collect();
            let d = ks_statistic(&sample, |t| exponential_cdf(1.0, t).unwrap()).unwrap();
            assert_abs_diff_eq!(d, 0.5 / n as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn point_at_median_gives_half() {
        let median = 2f64.ln();
        let d = ks_statistic(&[median], |t| exponential_cdf(1.0, t).unwrap()).unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(matches!(ks_statistic(&[], |t| t), Err(Error::EmptySample)));
    }

    #[test]
    fn pvalue_limits() {
        assert_eq!(ks_pvalue_asymptotic(0.0, 10).unwrap(), 1.0);
        assert!(ks_pvalue_asymptotic(4.0, 1).unwrap() < 1e-10);
        assert!(ks_pvalue_asymptotic(1.0, 16).unwrap() < 1e-10);
        assert!(ks_pvalue_asymptotic(-0.1, 10).is_err());
        assert!(ks_pvalue_asymptotic(0.1, 0).is_err());
    }

    #[test]
    fn series_matches_theta_form() {
        // Q(1.0) by 40 explicit terms of the defining series
        let direct: f64 = 2.0
            * (1..=40)
                .map(|k| {
                    let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                    s * (-2.0 * (k * k) as f64).exp()
                })
                .sum::<f64>();
        assert_abs_diff_eq!(direct, 0.269_999_671_4, epsilon = 1e-9);
        assert_abs_diff_eq!(
            ks_pvalue_asymptotic(1.0, 1).unwrap(),
            direct,
            epsilon = 1e-12
        );
        for i in 1..400 {
            let x = 0.1 + i as f64 * 0.01;
            assert_abs_diff_eq!(kolmogorov_q(x), q_theta(x), epsilon = 1e-11);
        }
    }

    #[test]
    fn one_sided_pieces() {
        let s = ks_statistics(&[0.2, 0.4, 0.9], |t| t).unwrap();
        // F_emp steps: 1/3 at 0.2, 2/3 at 0.4, 1 at 0.9
        assert_abs_diff_eq!(s.d_plus, 2.0 / 3.0 - 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(s.d_minus, 0.9 - 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(s.get(KsAlternative::TwoSided), s.d_plus.max(s.d_minus));
        assert_eq!(ks_pvalue(0.0, 5, KsAlternative::Greater).unwrap(), 1.0);
    }
}
