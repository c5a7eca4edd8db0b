use crate::error::{Error, Result};

const SQRT5: f64 = 2.236_067_977_499_79;

/// A covariance function over some input type.
pub trait Kernel: Sync {
    type Input: Sync;

    fn cov(&self, a: &Self::Input, b: &Self::Input) -> f64;
}

/// Lengthscales and output variance of a stationary ARD kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    lengthscales: Vec<f64>,
    inv_lengthscales: Vec<f64>,
    variance: f64,
}

impl KernelParams {
    pub fn new(lengthscales: Vec<f64>, variance: f64) -> Result<Self> {
        if lengthscales.is_empty() {
            return Err(Error::InvalidParameter("no lengthscales".into()));
        }
        if let Some(l) = lengthscales.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter(format!("lengthscale {l} must be positive")));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidParameter(format!("variance {variance} must be positive")));
        }
        let inv_lengthscales = lengthscales.iter().map(|l| 1.0 / l).collect();
        Ok(Self { lengthscales, inv_lengthscales, variance })
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Same lengthscales, different variance.
    pub fn with_variance(&self, variance: f64) -> Result<Self> {
        Self::new(self.lengthscales.clone(), variance)
    }

    /// Scaled distance `r = |(x - x2) / l|`.
    #[inline]
    pub fn scaled_distance(&self, x: &[f64], x2: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "input dimension does not match kernel");
        assert_eq!(x2.len(), self.dim(), "input dimension does not match kernel");
        let mut r2 = 0.0;
        for ((a, b), il) in x.iter().zip(x2).zip(&self.inv_lengthscales) {
            let t = (a - b) * il;
            r2 += t * t;
        }
        r2.sqrt()
    }
}

/// Matérn 5/2 correlation at scaled distance `r` (unit variance).
#[inline]
pub fn matern52_unit(r: f64) -> f64 {
    let sr = SQRT5 * r;
    (1.0 + sr + 5.0 * r * r / 3.0) * (-sr).exp()
}

/// Matérn 5/2 covariance `v (1 + √5 r + 5r²/3) exp(-√5 r)`.
///
/// Panics when either input does not have `params.dim()` coordinates.
pub fn matern52(x: &[f64], x2: &[f64], params: &KernelParams) -> f64 {
    params.variance * matern52_unit(params.scaled_distance(x, x2))
}

/// Matérn 5/2 kernel over points in the unit box.
#[derive(Debug, Clone, PartialEq)]
pub struct Matern52 {
    pub params: KernelParams,
}

impl Matern52 {
    pub fn new(params: KernelParams) -> Self {
        Self { params }
    }
}

impl Kernel for Matern52 {
    type Input = Vec<f64>;

    fn cov(&self, a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        matern52(a, b, &self.params)
    }
}
