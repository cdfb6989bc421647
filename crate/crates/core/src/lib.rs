//! Monte Carlo power of Poisson-null goodness-of-fit tests applied to short
//! event catalogs generated by a clustered process.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod hypothesis;
pub mod io;
pub mod power;
pub mod process;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
