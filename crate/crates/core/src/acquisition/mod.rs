//! Information-theoretic acquisition functions.
//!
//! [`AcquisitionContext`] scores `(x, s)` pairs against the hierarchical
//! surrogate; [`MesContext`] is the single-output counterpart used by the
//! fixed-strategy baselines.

mod batch;
mod gstar;
mod mumbo;
pub mod normal;
pub mod quadrature;

use nalgebra::DVector;

pub use batch::{log_det_correlation, BatchModel, BatchScorer, Element};
pub use gstar::{fit_gumbel, log_max_cdf, sample_gstar, samples_from_marginals, MaxValueSamples};
pub use mumbo::{closed_form_gain, gain_trapezoid, MumboRule, GAMMA_CLAMP, RHO_CLOSED_FORM, STD_NORMAL_ENTROPY};

use crate::error::Result;
use crate::gp::{GpPosterior, Kernel, Matern52};
use crate::hgp::{BivariateBelief, EvaluationPool, HgpPosterior, Realization};

/// Predictive standard deviations below this carry no information.
const MIN_SD: f64 = 1e-12;

/// Average gain over max-value samples for a belief `(μ_g, σ_g, ρ)`.
pub fn mumbo_from_belief(belief: &BivariateBelief, gstar: &MaxValueSamples, rule: &MumboRule) -> f64 {
    let sd_g = belief.var_g.sqrt();
    if !(sd_g > MIN_SD) || gstar.values.is_empty() {
        return 0.0;
    }
    let total: f64 = gstar.values.iter().map(|g| rule.gain(belief.corr, (g - belief.mean_g) / sd_g)).sum();
    total / gstar.values.len() as f64
}

/// Max-value entropy search for a single-output Gaussian predictive: the
/// `ρ = 1` closed form averaged over max-value samples.
pub fn mes(mean: f64, sd: f64, gstar: &MaxValueSamples) -> f64 {
    if !(sd > MIN_SD) || gstar.values.is_empty() {
        return 0.0;
    }
    let total: f64 = gstar.values.iter().map(|g| closed_form_gain((g - mean) / sd)).sum();
    total / gstar.values.len() as f64
}

/// Expected improvement of a Gaussian predictive over `incumbent` (maximization).
pub fn expected_improvement(mean: f64, sd: f64, incumbent: f64) -> f64 {
    if !(sd > MIN_SD) {
        return (mean - incumbent).max(0.0);
    }
    let u = (mean - incumbent) / sd;
    (sd * (u * normal::cdf(u) + normal::pdf(u))).max(0.0)
}

/// Surrogate, max-value samples and candidate realizations for one BO step.
pub struct AcquisitionContext<'a> {
    pub posterior: &'a HgpPosterior,
    pub gstar: MaxValueSamples,
    pub pool: &'a EvaluationPool,
    pub rule: &'a MumboRule,
}

impl<'a> AcquisitionContext<'a> {
    pub fn new(posterior: &'a HgpPosterior, gstar: MaxValueSamples, pool: &'a EvaluationPool) -> Self {
        Self { posterior, gstar, pool, rule: MumboRule::standard() }
    }

    /// `S* = S ∪ {NEW}`, the unseen realization tagged `new_handle`.
    pub fn candidates(&self, new_handle: u32) -> Vec<Realization> {
        self.pool.candidates(new_handle)
    }

    /// MUMBO value of evaluating `x` on realization `s`.
    pub fn mumbo(&self, x: &[f64], s: Realization) -> f64 {
        mumbo_from_belief(&self.posterior.joint_predict(x, s), &self.gstar, self.rule)
    }

    /// `½ ln|C_n| + Σ_j mumbo(z_j)`.
    pub fn bosh_batch_score(&self, batch: &[(Vec<f64>, Realization)]) -> Result<f64> {
        BatchScorer::new(self, batch).score()
    }
}

impl BatchModel for AcquisitionContext<'_> {
    type Arm = Realization;

    fn dim(&self) -> usize {
        self.posterior.dim()
    }

    fn noise(&self) -> f64 {
        self.posterior.params().noise
    }

    fn prior_cov(&self, x: &[f64], s: Realization, x2: &[f64], s2: Realization) -> f64 {
        self.posterior.prior_cov(x, s, x2, s2)
    }

    fn element(&self, x: &[f64], s: Realization) -> Element {
        let (belief, whitened) = self.posterior.joint_predict_whitened(x, s);
        Element {
            single: mumbo_from_belief(&belief, &self.gstar, self.rule),
            whitened,
            prior_var: self.posterior.prior_cov(x, s, x, s),
        }
    }
}

/// Single-output GP with max-value samples, scored by MES.
pub struct MesContext<'a> {
    pub posterior: &'a GpPosterior<Matern52>,
    pub gstar: MaxValueSamples,
}

impl MesContext<'_> {
    pub fn mes(&self, x: &[f64]) -> f64 {
        let (mean, var) = self.posterior.predict(&x.to_vec());
        mes(mean, var.sqrt(), &self.gstar)
    }
}

impl BatchModel for MesContext<'_> {
    type Arm = ();

    fn dim(&self) -> usize {
        self.posterior.kernel().params.dim()
    }

    fn noise(&self) -> f64 {
        self.posterior.noise()
    }

    fn prior_cov(&self, x: &[f64], _: (), x2: &[f64], _: ()) -> f64 {
        self.posterior.kernel().cov(&x.to_vec(), &x2.to_vec())
    }

    fn element(&self, x: &[f64], _: ()) -> Element {
        let xv = x.to_vec();
        let prior_var = self.posterior.kernel().cov(&xv, &xv);
        let (mean, whitened): (f64, DVector<f64>) = self.posterior.whiten(&xv);
        let var = (prior_var - whitened.norm_squared()).max(0.0);
        Element { single: mes(mean, var.sqrt(), &self.gstar), whitened, prior_var }
    }
}
