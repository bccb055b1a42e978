//! Fuk–Nagaev type tail bounds, hypothesis checks and Baum–Katz series
//! diagnostics for random fields indexed by `N^d`, with seeded Monte Carlo
//! verification.

// `!(v > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod conditions;
pub mod config;
pub mod error;
pub mod lattice;
pub mod montecarlo;
pub mod report;
pub mod rng;
pub mod samplers;
pub mod series;

pub use error::{Error, Result};
