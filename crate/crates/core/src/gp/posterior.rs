use nalgebra::{DMatrix, DVector};

use super::kernel::Kernel;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Jitter values tried, in order, when `K + σ²I` fails to factorize.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// Lower Cholesky factor of `m + jitter I`, walking the jitter ladder.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    for &jitter in &JITTER_LADDER {
        let mut a = m.clone();
        if jitter > 0.0 {
            for i in 0..a.nrows() {
                a[(i, i)] += jitter;
            }
        }
        if let Some(chol) = nalgebra::Cholesky::new(a) {
            return Ok((chol.unpack(), jitter));
        }
    }
    Err(Error::NotPositiveDefinite { jitter: *JITTER_LADDER.last().unwrap() })
}

/// Zero-mean GP conditioned on noisy observations.
///
/// Immutable once fitted; all prediction methods take `&self`.
#[derive(Debug, Clone)]
pub struct GpPosterior<K: Kernel> {
    kernel: K,
    inputs: Vec<K::Input>,
    targets: DVector<f64>,
    noise: f64,
    jitter: f64,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
}

/// Condition a zero-mean GP with kernel `kernel` on `(inputs, targets)`
/// under Gaussian noise of variance `noise`.
pub fn fit_gp<K: Kernel>(
    kernel: K,
    inputs: Vec<K::Input>,
    targets: Vec<f64>,
    noise: f64,
) -> Result<GpPosterior<K>> {
    if inputs.is_empty() {
        return Err(Error::NoObservations);
    }
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch { expected: inputs.len(), got: targets.len() });
    }
    if !(noise > 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise {noise} must be positive")));
    }
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.cov(&inputs[i], &inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, i)] += noise;
    }
    let (chol, jitter) = cholesky_with_jitter(&k)?;
    let targets = DVector::from_vec(targets);
    let mut alpha = targets.clone();
    chol.solve_lower_triangular_mut(&mut alpha);
    chol.tr_solve_lower_triangular_mut(&mut alpha);
    Ok(GpPosterior { kernel, inputs, targets, noise, jitter, chol, alpha })
}

impl<K: Kernel> GpPosterior<K> {
    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn inputs(&self) -> &[K::Input] {
        &self.inputs
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Jitter that was added to the diagonal to make the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Lower factor `L` with `L Lᵀ = K + (σ² + jitter) I`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Prior covariances between every training input and `x`.
    pub fn cross_cov(&self, x: &K::Input) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.inputs.iter().map(|xi| self.kernel.cov(xi, x)))
    }

    /// Posterior mean and whitened cross-covariance `L⁻¹ k(X, x)` for a test input.
    ///
    /// Posterior covariance between two test inputs `a` and `b` is
    /// `k(a, b) - v_aᵀ v_b`.
    pub fn whiten(&self, x: &K::Input) -> (f64, DVector<f64>) {
        let mut v = self.cross_cov(x);
        let mean = v.dot(&self.alpha);
        self.chol.solve_lower_triangular_mut(&mut v);
        (mean, v)
    }

    /// Latent predictive mean and variance (observation noise excluded).
    pub fn predict(&self, x: &K::Input) -> (f64, f64) {
        let (mean, v) = self.whiten(x);
        let var = self.kernel.cov(x, x) - v.norm_squared();
        (mean, var.max(0.0))
    }

    /// Joint latent posterior over several test inputs.
    pub fn predict_joint(&self, xs: &[&K::Input]) -> (DVector<f64>, DMatrix<f64>) {
        let m = xs.len();
        let whitened: Vec<(f64, DVector<f64>)> = xs.iter().map(|x| self.whiten(x)).collect();
        let means = DVector::from_iterator(m, whitened.iter().map(|(mu, _)| *mu));
        let mut cov = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let c = self.kernel.cov(xs[i], xs[j]) - whitened[i].1.dot(&whitened[j].1);
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
        }
        (means, cov)
    }

    /// `log p(y | X)` at the parameters this posterior was fitted with.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len() as f64;
        let fit = self.targets.dot(&self.alpha);
        let log_det: f64 = self.chol.diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
        -0.5 * fit - 0.5 * log_det - 0.5 * n * LN_2PI
    }
}

/// `-½ yᵀ(K+σ²I)⁻¹y - ½ log|K+σ²I| - (n/2) log 2π`.
pub fn log_marginal_likelihood<K: Kernel>(
    kernel: K,
    inputs: Vec<K::Input>,
    targets: Vec<f64>,
    noise: f64,
) -> Result<f64> {
    Ok(fit_gp(kernel, inputs, targets, noise)?.log_marginal_likelihood())
}
