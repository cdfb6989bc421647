use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Pearson's `sum (O - E)^2 / E`.
pub fn chi2_statistic(observed: &[u64], expected: &[f64]) -> Result<f64> {
    if observed.len() != expected.len() {
        return Err(Error::invalid(
            "expected",
            format!(
                "{} categories observed but {} expected",
                observed.len(),
                expected.len()
            ),
        ));
    }
    if let Some(e) = expected.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::invalid(
            "expected",
            format!("frequencies must be positive, got {e}"),
        ));
    }
    if observed.iter().all(|&o| o == 0) {
        return Err(Error::EmptySample);
    }
    Ok(observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum())
}

/// Upper-tail probability of the chi-square law with `dof` degrees of freedom.
pub fn chi2_pvalue(x: f64, dof: usize) -> Result<f64> {
    if dof == 0 {
        return Err(Error::invalid("dof", "must be at least 1"));
    }
    if !(x >= 0.0) {
        return Err(Error::invalid(
            "x",
            format!("must be non-negative, got {x}"),
        ));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_ur(dof as f64 / 2.0, x / 2.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn statistic_values() {
        assert_eq!(chi2_statistic(&[3, 7], &[3.0, 7.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            chi2_statistic(&[5, 15], &[10.0, 10.0]).unwrap(),
            5.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn statistic_matches_direct_summation_under_scaling() {
        let observed = [4u64, 9, 2, 5];
        let expected = [5.0, 6.5, 3.5, 5.0];
        for scale in 1..6u64 {
            let o: Vec<u64> = observed.iter().map(|x| x * scale).collect();
            let e: Vec<f64> = expected.iter().map(|x| x * scale as f64).collect();
            let mut direct = 0.0;
            for i in 0..4 {
                direct += (o[i] as f64 - e[i]).powi(2) / e[i];
            }
            assert_abs_diff_eq!(chi2_statistic(&o, &e).unwrap(), direct, epsilon = 1e-12);
            // Pearson's statistic is linear in a common scale factor.
            assert_abs_diff_eq!(
                direct,
                scale as f64 * 1.804_395_604_395_604_6,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn statistic_errors() {
        assert!(chi2_statistic(&[1, 2], &[1.0, 0.0]).is_err());
        assert!(chi2_statistic(&[1, 2], &[1.0, -2.0]).is_err());
        assert!(chi2_statistic(&[1], &[1.0, 2.0]).is_err());
        assert!(matches!(
            chi2_statistic(&[0, 0], &[1.0, 1.0]),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn pvalue_values() {
        for dof in 1..10 {
            assert_eq!(chi2_pvalue(0.0, dof).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(chi2_pvalue(2.0, 2).unwrap(), (-1f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(chi2_pvalue(3.8415, 1).unwrap(), 0.05, epsilon = 1e-5);
        assert!(chi2_pvalue(1.0, 0).is_err());
        assert!(chi2_pvalue(-1.0, 3).is_err());
    }

    #[test]
    fn pvalue_is_decreasing() {
        for dof in 1..8 {
            let mut prev = 1.0;
            for i in 1..200 {
                let p = chi2_pvalue(i as f64 * 0.25, dof).unwrap();
                assert!(p <= prev);
                prev = p;
            }
        }
    }
}
