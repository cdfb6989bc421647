use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous empirical distribution function of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        if sample.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid("sample", "contains NaN"));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample `<= t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= t) as f64 / self.sorted.len() as f64
    }

    /// Nearest-rank quantile; see [`quantile`].
    pub fn quantile(&self, level: f64) -> Result<f64> {
        check_level(level)?;
        Ok(nearest_rank(&self.sorted, level))
    }
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "level",
            format!("must lie in (0, 1), got {level}"),
        ))
    }
}

fn nearest_rank(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    // the slack keeps levels like 0.9 * 10 from rounding up past an exact rank
    let rank = (level * n as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Nearest-rank empirical quantile: the smallest sample value whose rank is
/// at least `ceil(level * n)`.
pub fn quantile(sample: &[f64], level: f64) -> Result<f64> {
    EmpiricalCdf::new(sample)?.quantile(level)
}

/// Fixed-edge histogram. Bins are half-open `[lo, hi)` except the last,
/// which also holds its upper edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    edges: Vec<f64>,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
}

impl Histogram {
    pub fn with_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::invalid("edges", "need at least two edges"));
        }
        if edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("edges", "must be strictly increasing"));
        }
        let bins = edges.len() - 1;
        Ok(Self {
            edges,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    /// `bins` equal-width bins on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::invalid("bins", "must be at least 1"));
        }
        if !(lo < hi) {
            return Err(Error::invalid("hi", "must exceed lo"));
        }
        let span = hi - lo;
        let mut edges: Vec<f64> = (0..bins)
            .map(|i| lo + span * i as f64 / bins as f64)
            .collect();
        edges.push(hi);
        Self::with_edges(edges)
    }

    pub fn add(&mut self, x: f64) {
        let first = self.edges[0];
        let last = *self.edges.last().unwrap();
        if x < first {
            self.underflow += 1;
        } else if x > last || x.is_nan() {
            self.overflow += 1;
        } else {
            let i = self.edges.partition_point(|&e| e <= x);
            let bin = (i - 1).min(self.counts.len() - 1);
            self.counts[bin] += 1;
        }
    }

    /// Adds another histogram with identical edges.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::invalid("other", "histogram edges differ"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        Ok(())
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn underflow(&self) -> u64 {
        self.underflow
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    /// Count inside the bins (excludes under/overflow).
    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.in_range() + self.underflow + self.overflow
    }

    /// Per-bin fractions of the in-range count.
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.in_range();
        if n == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / n as f64).collect()
    }

    /// `(start, end, count)` per bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(w, &c)| (w[0], w[1], c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nearest_rank_examples() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0], 0.5).unwrap(), 2.0);
        let ten: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(quantile(&ten, 0.9).unwrap(), 9.0);
        assert_eq!(quantile(&ten, 1e-9).unwrap(), 1.0);
        assert_eq!(quantile(&ten, 1.0 - 1e-9).unwrap(), 10.0);
        assert!(quantile(&[], 0.5).is_err());
        assert!(quantile(&ten, 0.0).is_err());
        assert!(quantile(&ten, 1.0).is_err());
    }

    #[test]
    fn ecdf_steps_at_ties() {
        let cdf = EmpiricalCdf::new(&[2.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(cdf.eval(0.5), 0.0);
        assert_eq!(cdf.eval(1.0), 0.25);
        assert_eq!(cdf.eval(1.999), 0.25);
        assert_eq!(cdf.eval(2.0), 0.75);
        assert_eq!(cdf.eval(f64::INFINITY), 1.0);
        assert_eq!(cdf.eval(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn histogram_edges_and_flows() {
        let mut h = Histogram::uniform(0.0, 1.0, 20).unwrap();
        for x in [0.0, 0.049, 0.05, 1.0, -0.1, 1.1] {
            h.add(x);
        }
        assert_eq!(h.counts()[0], 2);
        assert_eq!(h.counts()[1], 1);
        assert_eq!(h.counts()[19], 1);
        assert_eq!(h.underflow(), 1);
        assert_eq!(h.overflow(), 1);
        assert_eq!(h.total(), 6);
        assert!(Histogram::with_edges(vec![0.0, 0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn quantile_is_monotone(
            mut xs in prop::collection::vec(-1e3f64..1e3, 1..60),
            a in 0.001f64..0.999,
            b in 0.001f64..0.999,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let qlo = quantile(&xs, lo).unwrap();
            let qhi = quantile(&xs, hi).unwrap();
            prop_assert!(qlo <= qhi);
            xs.sort_by(f64::total_cmp);
            prop_assert!(xs.contains(&qlo));
        }

        #[test]
        fn histogram_preserves_total(xs in prop::collection::vec(-0.5f64..1.5, 0..200)) {
            let mut h = Histogram::uniform(0.0, 1.0, 7).unwrap();
            for &x in &xs {
                h.add(x);
            }
            prop_assert_eq!(h.total(), xs.len() as u64);
        }
    }
}
