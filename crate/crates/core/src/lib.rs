//! Spectral measures of transition operators, variance growth of partial sums
//! and regenerative Metropolis-Hastings experiments.

// `!(x > 0.0)` is the NaN-rejecting guard used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(
    clippy::excessive_precision,
    clippy::type_complexity,
    clippy::needless_range_loop
)]

pub mod brownian;
pub mod chain;
pub mod cli;
pub mod cts;
pub mod error;
pub mod measures;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod variance_class;

pub use error::{Error, Result};
