//! Configuration, file formats, experiments and the command-line front end
//! for the `dpl1-core` private regression estimator.
//!
//! The `dpl1` binary has five subcommands:
//!
//! - `synth`: draw a dataset from the configured population model.
//! - `fit`: run the private estimator on a dataset CSV.
//! - `audit`: compute exact output distributions on neighbor pairs and
//!   check the privacy inequality.
//! - `sweep`: measure excess risk across a grid of sample sizes and ε.
//! - `net`: export the covering net of the constraint set.
//!
//! Exit codes: 0 success, 2 invalid input, 3 net capacity, 4 failed audit
//! or covering check, 5 I/O.

pub mod audit;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod experiment;
pub mod manifest;
