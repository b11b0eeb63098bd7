//! Small area estimation with the spatial Fay-Herriot model and functional
//! covariates.
//!
//! The crate fits an area-level model Y_i = theta_i + eps_i in which the
//! latent small-area means combine an intercept, functional covariates
//! reduced by an empirical Karhunen-Loeve expansion with spike-and-slab
//! selection, optional scalar covariates, and intrinsic CAR spatial random
//! effects under a sum-to-zero constraint. Everything is sampled by a
//! Gibbs sampler with conjugate full conditionals.
//!
//! Modules:
//!
//! - [`data`]: survey and functional-covariate ingestion, validation, and
//!   the relative-change outcome transform.
//! - [`kl`]: empirical Karhunen-Loeve decomposition, truncation, and
//!   standardized score extraction.
//! - [`graph`]: area adjacency, the ICAR precision structure, and exact
//!   constrained Gaussian sampling.
//! - [`gibbs`]: the sampler, its full conditionals, and posterior
//!   summaries.
//! - [`experiments`]: calibrated simulation study, model comparison,
//!   leave-one-out evaluation, and the spike-and-slab sensitivity grid.
//! - [`config`] and [`cli`]: config-driven command implementations behind
//!   the `sae` binary.
//!
//! The `examples/` directory walks through each capability; see the README
//! for the CLI surface.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod gibbs;
pub mod graph;
pub mod kl;
pub mod stats;

pub use error::{Error, Result};
