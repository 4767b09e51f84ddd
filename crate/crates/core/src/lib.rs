//! Log-linear and logistic analysis of contingency tables, with machinery
//! to verify numerically that the two routes agree.
//!
//! A complete table of counts cross-classified by categorical factors can
//! be analysed two ways: as a Poisson regression of the cell counts with a
//! log link (a log-linear model), or, after singling out one binary factor
//! as the outcome, as a grouped binomial logistic regression over the
//! remaining cross-classifications. When the log-linear model contains the
//! full interaction among the non-outcome factors, the second analysis is
//! embedded in the first: outcome-bearing coefficients, their covariance,
//! and (on the ungrouped classes) the deviance all coincide exactly.
//!
//! The crate provides:
//! - [`formula`]: hierarchical interaction model formulas (`AC+AD+AE+BCDEF`)
//!   and the derivation of the implied logistic formula;
//! - [`table`]: dense contingency tables, margins, grouping by a binary
//!   outcome, and merging of grouped classes;
//! - [`design`]: corner-point design matrices, the incidence matrix mapping
//!   logistic to log-linear parameters, and the block rearrangement that
//!   exhibits the embedding;
//! - [`glm`]: IRLS maximum likelihood fitting for both families, deviances,
//!   and Wald intervals;
//! - [`correspondence`]: building both fits for one table and checking the
//!   agreement statements at a configurable tolerance;
//! - [`dataset`]: the bundled six-factor risk-factor dataset and its
//!   reference analysis values;
//! - [`simulate`]: seeded random scenario generation for the property
//!   suites.

pub mod correspondence;
pub mod dataset;
pub mod design;
pub mod error;
pub mod formula;
pub mod glm;
pub mod simulate;
pub mod table;

pub use error::{Error, Result};

// estimates and covariances in the public API are nalgebra types
pub use nalgebra;
