use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::EventCatalog;

/// Consecutive differences `t[i+1] - t[i]`.
pub fn inter_event_times(catalog: &EventCatalog) -> Result<Vec<f64>> {
    let times = catalog.times();
    if times.len() < 2 {
        return Err(Error::TooFewEvents {
            needed: 2,
            have: times.len(),
        });
    }
    Ok(times.windows(2).map(|w| w[1] - w[0]).collect())
}

/// How many events a gap spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapOrder {
    /// Gaps spanning exactly `n` events.
    Fixed(u32),
    /// Every pairwise difference, i.e. the inter-n-event times of all orders.
    All,
}

impl fmt::Display for GapOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GapOrder::Fixed(n) => write!(f, "{n}"),
            GapOrder::All => f.write_str("all"),
        }
    }
}

impl FromStr for GapOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(GapOrder::All);
        }
        match s.parse::<u32>() {
            Ok(n) if n >= 1 => Ok(GapOrder::Fixed(n)),
            _ => Err(format!("expected `all` or a positive integer, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overlap {
    /// `t[kn+n] - t[kn]`: disjoint gaps, independent under a Poisson null.
    #[default]
    NonOverlapping,
    /// `t[i+n] - t[i]` for every `i`.
    Sliding,
}

/// Number of reference bins for a Pearson test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinCount {
    /// As many bins as keep the expected count per bin at least five (never
    /// fewer than two).
    Auto,
    Fixed(usize),
}

impl BinCount {
    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            BinCount::Fixed(k) if *k < 2 => Err(Error::invalid("bins", "must be at least 2")),
            _ => Ok(()),
        }
    }

    /// Bin count for `expected_items` items spread over equal-probability bins.
    pub(crate) fn resolve(&self, expected_items: f64) -> usize {
        match *self {
            BinCount::Fixed(k) => k,
            BinCount::Auto => ((expected_items / 5.0).floor() as usize).max(2),
        }
    }
}

impl FromStr for BinCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(BinCount::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 2 => Ok(BinCount::Fixed(k)),
            _ => Err(format!("expected `auto` or an integer >= 2, got `{s}`")),
        }
    }
}

impl fmt::Display for BinCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinCount::Auto => f.write_str("auto"),
            BinCount::Fixed(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterEventConfig {
    pub order: GapOrder,
    #[serde(default)]
    pub overlap: Overlap,
    pub bins: BinCount,
}

impl Default for InterEventConfig {
    fn default() -> Self {
        Self {
            order: GapOrder::All,
            overlap: Overlap::NonOverlapping,
            bins: BinCount::Auto,
        }
    }
}

impl InterEventConfig {
    pub fn fixed(n: u32) -> Self {
        Self {
            order: GapOrder::Fixed(n),
            overlap: Overlap::NonOverlapping,
            bins: BinCount::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == GapOrder::Fixed(0) {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        self.bins.validate()
    }

    /// Fewest events that yield at least one gap.
    pub fn min_events(&self) -> usize {
        match self.order {
            GapOrder::Fixed(n) => n as usize + 1,
            GapOrder::All => 2,
        }
    }
}

pub fn inter_n_event_times(catalog: &EventCatalog, config: &InterEventConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let times = catalog.times();
    let needed = config.min_events();
    if times.len() < needed {
        return Err(Error::TooFewEvents {
            needed,
            have: times.len(),
        });
    }
    Ok(match (config.order, config.overlap) {
        (GapOrder::All, _) => {
            let mut out = Vec::with_capacity(times.len() * (times.len() - 1) / 2);
            for (i, &a) in times.iter().enumerate() {
                out.extend(times[i + 1..].iter().map(|&b| b - a));
            }
            out
        }
        (GapOrder::Fixed(n), Overlap::Sliding) => {
            let n = n as usize;
            times.iter().zip(&times[n..]).map(|(a, b)| b - a).collect()
        }
        (GapOrder::Fixed(n), Overlap::NonOverlapping) => {
            let n = n as usize;
            (0..)
                .map(|k| k * n)
                .take_while(|&i| i + n < times.len())
                .map(|i| times[i + n] - times[i])
                .collect()
        }
    })
}
