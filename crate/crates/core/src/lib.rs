//! Explicit error bounds for mixed Poisson, compound Poisson and Gaussian
//! approximations built on biasing by an independent increment, together with
//! exact and Monte Carlo machinery to check each bound against the true distance.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biasing;
pub mod bounds;
pub mod dist_core;
pub mod distances;
pub mod error;
pub mod experiments;
pub mod metric;
pub mod numeric;
pub mod rng;
pub mod stein_factors;

pub use error::{Error, Result};
pub use metric::Metric;
