//! Numeric kernels shared by every test: reference distributions, test
//! statistics and p-value functions.
//!
//! All distribution functions here are CDFs. The exponential law of a Poisson
//! process's waiting times is often written through its survival function
//! `exp(-rate * t)`; [`exponential_sf`] is that form and
//! [`exponential_cdf`] is its complement.

mod chi2;
mod dist;
mod ecdf;
mod ks;

pub use chi2::{chi2_pvalue, chi2_statistic};
pub use dist::{
    erlang_cdf, erlang_quantile, exponential_cdf, exponential_sf, mle_rate, poisson_pmf, poisson_sf,
};
pub use ecdf::{quantile, EmpiricalCdf, Histogram};
pub use ks::{
    ks_pvalue, ks_pvalue_asymptotic, ks_pvalue_one_sided_asymptotic, ks_statistic, ks_statistics,
    KsAlternative, KsStatistics,
};
