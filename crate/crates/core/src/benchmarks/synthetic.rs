//! Objective family sampled from the hierarchical GP itself.
//!
//! A latent `g` is drawn once on a fine grid and linearly interpolated. Each
//! minted realization adds a perturbation `δ_s ~ GP(0, k_f)` that is drawn
//! lazily: every new query point is sampled from its conditional given all
//! earlier queries of the same realization, so `f_s` is a consistent sample
//! path however it is explored.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Benchmark;
use crate::error::{Error, Result};
use crate::gp::{cholesky_with_jitter, matern52_unit};
use crate::streams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub grid_size: usize,
    pub lengthscale: f64,
    pub upper_variance: f64,
    /// Variance `V` of the per-realization perturbation.
    pub lower_variance: f64,
    pub noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { grid_size: 1000, lengthscale: 0.1, upper_variance: 1.0, lower_variance: 0.5, noise: 0.01 }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.grid_size < 2 {
            errs.push(format!("benchmark.grid_size: must be ≥ 2, got {}", self.grid_size));
        }
        if !(self.lengthscale > 0.0 && self.lengthscale.is_finite()) {
            errs.push(format!("benchmark.lengthscale: must be > 0, got {}", self.lengthscale));
        }
        if !(self.upper_variance > 0.0 && self.upper_variance.is_finite()) {
            errs.push(format!("benchmark.upper_variance: must be > 0, got {}", self.upper_variance));
        }
        if !(self.lower_variance >= 0.0 && self.lower_variance.is_finite()) {
            errs.push(format!("benchmark.lower_variance: must be ≥ 0, got {}", self.lower_variance));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            errs.push(format!("benchmark.noise: must be ≥ 0, got {}", self.noise));
        }
        errs
    }
}

/// Lazily sampled perturbation path of one realization.
struct Perturbation {
    xs: Vec<f64>,
    values: Vec<f64>,
    /// Rows of the lower Cholesky factor of `k_f` at `xs`.
    chol: Vec<Vec<f64>>,
    /// `L⁻¹ values`.
    whitened: Vec<f64>,
    rng: ChaCha8Rng,
}

pub struct SyntheticBenchmark {
    config: SyntheticConfig,
    g: Vec<f64>,
    best: (f64, f64),
    seed: u64,
    realizations: Vec<Perturbation>,
    noise_rng: ChaCha8Rng,
}

impl SyntheticBenchmark {
    pub fn new(config: SyntheticConfig, seed: u64) -> Result<Self> {
        let errs = config.validate();
        if !errs.is_empty() {
            return Err(Error::Benchmark(errs.join("; ")));
        }
        let n = config.grid_size;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let cov = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            config.upper_variance * matern52_unit((grid[i] - grid[j]).abs() / config.lengthscale)
        });
        let (l, _) = cholesky_with_jitter(&cov)?;
        let mut rng = streams::stream(seed, "synthetic-latent", 0);
        let z = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let g: Vec<f64> = (l * z).iter().copied().collect();
        let (argmax, gmax) = g.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        Ok(Self {
            best: (grid[argmax], gmax),
            config,
            g,
            seed,
            realizations: Vec::new(),
            noise_rng: streams::stream(seed, "synthetic-noise", 0),
        })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    pub fn grid_values(&self) -> &[f64] {
        &self.g
    }

    /// Grid argmax and max of `g`.
    pub fn optimum(&self) -> (f64, f64) {
        self.best
    }

    /// Latent `g(x)` by linear interpolation.
    pub fn latent(&self, x: f64) -> f64 {
        let n = self.g.len();
        let t = x.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (t.floor() as usize).min(n - 2);
        let w = t - i as f64;
        (1.0 - w) * self.g[i] + w * self.g[i + 1]
    }

    fn k_f(&self, a: f64, b: f64) -> f64 {
        self.config.lower_variance * matern52_unit((a - b).abs() / self.config.lengthscale)
    }

    /// `δ_s(x)`, sampling it if this realization has not seen `x` yet.
    pub fn perturbation(&mut self, handle: u64, x: f64) -> Result<f64> {
        let v = self.config.lower_variance;
        if v == 0.0 {
            self.realization(handle)?;
            return Ok(0.0);
        }
        let idx = self.realization(handle)?;
        if let Some(k) = self.realizations[idx].xs.iter().position(|p| *p == x) {
            return Ok(self.realizations[idx].values[k]);
        }
        let kx: Vec<f64> = self.realizations[idx].xs.iter().map(|p| self.k_f(*p, x)).collect();
        let r = &mut self.realizations[idx];
        let mut w = vec![0.0; kx.len()];
        for i in 0..kx.len() {
            let acc: f64 = (0..i).map(|j| r.chol[i][j] * w[j]).sum();
            w[i] = (kx[i] - acc) / r.chol[i][i];
        }
        let mean: f64 = w.iter().zip(&r.whitened).map(|(a, b)| a * b).sum();
        let var = (v - w.iter().map(|a| a * a).sum::<f64>()).max(0.0);
        let diag = (var + 1e-10 * v).sqrt();
        let xi: f64 = StandardNormal.sample(&mut r.rng);
        let value = mean + var.sqrt() * xi;
        r.whitened.push((value - mean) / diag);
        w.push(diag);
        r.chol.push(w);
        r.xs.push(x);
        r.values.push(value);
        Ok(value)
    }

    fn realization(&self, handle: u64) -> Result<usize> {
        let idx = handle as usize;
        if idx < self.realizations.len() {
            Ok(idx)
        } else {
            Err(Error::Benchmark(format!("unknown realization {handle}")))
        }
    }
}

impl Benchmark for SyntheticBenchmark {
    fn name(&self) -> &str {
        "synthetic"
    }

    fn dim(&self) -> usize {
        1
    }

    fn mint(&mut self) -> u64 {
        let handle = self.realizations.len() as u64;
        self.realizations.push(Perturbation {
            xs: Vec::new(),
            values: Vec::new(),
            chol: Vec::new(),
            whitened: Vec::new(),
            rng: streams::stream(self.seed, "synthetic-realization", handle),
        });
        handle
    }

    fn evaluate(&mut self, x: &[f64], handle: u64) -> Result<f64> {
        if x.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: x.len() });
        }
        let delta = self.perturbation(handle, x[0])?;
        let eps = if self.config.noise > 0.0 {
            let z: f64 = StandardNormal.sample(&mut self.noise_rng);
            self.config.noise.sqrt() * z
        } else {
            0.0
        };
        Ok(self.latent(x[0]) + delta + eps)
    }

    fn true_value(&self, x: &[f64]) -> f64 {
        self.latent(x[0])
    }

    fn true_optimum(&self) -> Option<f64> {
        Some(self.best.1)
    }
}
