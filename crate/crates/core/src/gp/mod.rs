//! Stationary-kernel Gaussian-process regression.

mod hyper;
mod kernel;
mod posterior;

pub use hyper::{
    default_max_evals, maximize_restarts, nelder_mead_max, optimize_hyperparameters,
    optimize_hyperparameters_from, HyperBounds, LogBox,
};
pub use kernel::{matern52, matern52_unit, Kernel, KernelParams, Matern52};
pub use posterior::{cholesky_with_jitter, fit_gp, log_marginal_likelihood, GpPosterior, JITTER_LADDER};
