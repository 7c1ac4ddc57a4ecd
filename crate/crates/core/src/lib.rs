//! Geometric (pointing) loss of a drone-mounted free-space-optical fronthaul
//! link: exact, bounded, approximated and statistical models, plus a seeded
//! Monte Carlo engine that checks the statistical model against sampling.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geoloss;
pub mod geometry;
pub mod montecarlo;
pub mod numerics;
pub mod output;
pub mod rng;
pub mod stochastic;

pub use error::{Error, Result};
