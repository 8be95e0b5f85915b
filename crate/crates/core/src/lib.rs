//! Improved Fréchet–Hoeffding bounds on quasi-copulas under partial dependence
//! information, certificates for proper quasi-copulas, and model-free price
//! bounds for multi-asset options.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod certify;
pub mod checkerboard;
pub mod cli;
pub mod error;
pub mod grid;
pub mod marginal;
pub mod market;
pub mod payoff;
pub mod pricing;
pub mod qcopula;
pub mod quad;
pub mod suites;
pub mod svg;

pub use error::{Error, Result};
