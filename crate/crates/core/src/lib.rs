//! Bayesian optimization of stochastic objectives by sampling realizations
//! hierarchically.
//!
//! A hierarchical GP models each realization `f_s` as a perturbation of the
//! latent objective `g`; a batch max-value information criterion decides
//! where, and on which realization, to evaluate next.

pub mod acquisition;
pub mod benchmarks;
pub mod design;
pub mod direct;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod hgp;
pub mod streams;

pub use error::{Error, Result};
