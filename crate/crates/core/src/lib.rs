//! Differentially private ℓ1-norm linear regression for heavy-tailed data.
//!
//! The estimator replaces the empirical ℓ1 risk with a truncated risk whose
//! per-record influence is bounded, then selects a point of a finite covering
//! net of the parameter domain with the exponential mechanism. Because the
//! score sensitivity is bounded the selection is ε-differentially private for
//! any data distribution, while the truncation keeps the excess population
//! risk small when the covariates only have a few finite moments.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the experiment CLI live in the companion `dpl1` crate.
//!
//! Module map:
//!
//! - [`geometry`]: constraint sets and ζ-nets with a randomized covering check.
//! - [`truncation`]: the truncation functions ψ and the empirical risks.
//! - [`mechanism`]: exponential-mechanism sampling, exact output
//!   distributions and exact ε-DP audits.
//! - [`estimator`]: parameter selection and the end-to-end private fit.
//! - [`synth`]: heavy-tailed synthetic data and certified moment bounds.
//! - [`evaluation`]: population-risk oracles, excess risk and concentration
//!   probes.
#![cfg_attr(not(test), no_std)]
#![deny(rust_2018_idioms)]

extern crate alloc;

pub mod dataset;
pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod geometry;
pub mod mechanism;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;
pub mod synth;
pub mod truncation;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use estimator::{
    choose_parameters, dp_l1_fit, nonprivate_net_minimizer, Assumption, EstimateResult,
    EstimatorParams, ResolvedParams, ZetaRule,
};
pub use geometry::{build_net, cardinality_bound, covering_check, ConstraintSet, Net};
pub use mechanism::{
    dp_audit, exact_output_distribution, sample, score_sensitivity, AuditReport, MechanismResult,
    MechanismSpec,
};
pub use rng::StreamRng;
pub use synth::{certified_tau, empirical_moment, synth, Design, MomentMode, Noise, PopulationModel};
pub use truncation::{l1_empirical_risk, psi, truncated_empirical_risk, TruncationSpec};
