//! Classification with permanental processes.
//!
//! A class (or an unlabelled block) is modelled as a permanental point process
//! with a nonnegative covariance function `K` and shape parameter `alpha`. The
//! predictive weight of a new point `t` for a class with training points `x` is
//! the permanental ratio `per_a(K(x + t)) / per_a(K(x))`, and for an open-ended
//! set of blocks the cyclic ratio `cyp(K(x + t)) / cyp(K(x))`.
//!
//! * [`permanent`] evaluates these exactly for small `n` by enumeration.
//! * [`cyclic`] approximates them in polynomial time by truncating the cyclic
//!   expansion (orders 0..=3) with precomputed leave-out tables.
//! * [`classifier`] turns ratios into class and block posteriors.
//! * [`model_select`], [`datasets`], [`bench`] and [`experiments`] cover
//!   cross-validation, data generation and ingestion, timing, and the
//!   end-to-end studies.

pub mod error;
pub mod graded;
pub mod kernel;
pub mod permanent;
pub mod cyclic;
pub mod classifier;
pub mod config;
pub mod datasets;
pub mod model_select;
pub mod output;
pub mod bench;
pub mod experiments;

pub use error::{Error, Result};
