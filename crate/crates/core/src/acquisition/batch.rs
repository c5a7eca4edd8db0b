//! Batch lower bound `½ ln|C| + Σ_j α(z_j)`.
//!
//! `C` is the posterior correlation matrix of the batch's noisy observations.
//! A [`BatchScorer`] caches the whitened cross-covariances of the elements
//! already fixed, so extending a batch by one candidate costs one triangular
//! solve plus a small Cholesky.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Single-element statistics a batch score needs.
#[derive(Debug, Clone)]
pub struct Element {
    /// Single-point acquisition value.
    pub single: f64,
    /// `L⁻¹ k(X, z)` for the observation at this element.
    pub whitened: DVector<f64>,
    /// Prior variance `k(z, z)` of the latent value at this element.
    pub prior_var: f64,
}

/// A model that can score candidate batch elements `(x, arm)`.
pub trait BatchModel: Sync {
    type Arm: Copy + PartialEq + Send + Sync + std::fmt::Debug;

    fn dim(&self) -> usize;

    fn noise(&self) -> f64;

    fn prior_cov(&self, x: &[f64], arm: Self::Arm, x2: &[f64], arm2: Self::Arm) -> f64;

    fn element(&self, x: &[f64], arm: Self::Arm) -> Element;
}

/// Score of a batch with a fixed prefix, extendable by one element.
pub struct BatchScorer<'m, M: BatchModel> {
    model: &'m M,
    fixed: Vec<(Vec<f64>, M::Arm, Element)>,
    fixed_cov: DMatrix<f64>,
    fixed_single: f64,
}

impl<'m, M: BatchModel> BatchScorer<'m, M> {
    pub fn new(model: &'m M, fixed: &[(Vec<f64>, M::Arm)]) -> Self {
        let elems: Vec<(Vec<f64>, M::Arm, Element)> =
            fixed.iter().map(|(x, a)| (x.clone(), *a, model.element(x, *a))).collect();
        let n = elems.len();
        let mut cov = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let c = noisy_cov(model, &elems[i], &elems[j], i == j);
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        let fixed_single = elems.iter().map(|e| e.2.single).sum();
        Self { model, fixed: elems, fixed_cov: cov, fixed_single }
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    /// Score of the fixed elements alone.
    pub fn score(&self) -> Result<f64> {
        if self.fixed.is_empty() {
            return Err(Error::InvalidParameter("empty batch".into()));
        }
        Ok(0.5 * log_det_correlation(&self.fixed_cov)? + self.fixed_single)
    }

    /// Score of the fixed elements plus `(x, arm)`.
    pub fn score_with(&self, x: &[f64], arm: M::Arm) -> Result<f64> {
        let new = (x.to_vec(), arm, self.model.element(x, arm));
        let n = self.fixed.len();
        if n == 0 {
            return Ok(new.2.single);
        }
        let mut cov = self.fixed_cov.clone().resize(n + 1, n + 1, 0.0);
        for (i, f) in self.fixed.iter().enumerate() {
            let c = noisy_cov(self.model, f, &new, false);
            cov[(i, n)] = c;
            cov[(n, i)] = c;
        }
        cov[(n, n)] = noisy_cov(self.model, &new, &new, true);
        Ok(0.5 * log_det_correlation(&cov)? + self.fixed_single + new.2.single)
    }
}

fn noisy_cov<M: BatchModel>(
    model: &M,
    a: &(Vec<f64>, M::Arm, Element),
    b: &(Vec<f64>, M::Arm, Element),
    diagonal: bool,
) -> f64 {
    let prior = if diagonal { a.2.prior_var } else { model.prior_cov(&a.0, a.1, &b.0, b.1) };
    let post = prior - a.2.whitened.dot(&b.2.whitened);
    if diagonal {
        post.max(0.0) + model.noise()
    } else {
        post
    }
}

/// `ln|C|` for the correlation matrix of covariance `cov`. Always `≤ 0`.
pub fn log_det_correlation(cov: &DMatrix<f64>) -> Result<f64> {
    let n = cov.nrows();
    let sd: Vec<f64> = (0..n).map(|i| cov[(i, i)].sqrt()).collect();
    if sd.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Numerical("zero predictive variance in batch".into()));
    }
    let corr = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            0.5 * (cov[(i, j)] + cov[(j, i)]) / (sd[i] * sd[j])
        }
    });
    let chol = nalgebra::Cholesky::new(corr)
        .ok_or_else(|| Error::Numerical("batch correlation matrix is not positive definite".into()))?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}
