//! Approximate samples of the maximum value `g* = max_x g(x)`.
//!
//! The posterior CDF of the maximum is approximated by treating predictions
//! at a quasi-random grid (plus every observed location) as independent,
//! `P(g* ≤ y) ≈ Π_i Φ((y - μ_i) / σ_i)`. A Gumbel distribution is matched to
//! its quartiles and sampled by inversion.

use rand::Rng;

use super::normal;
use crate::design;
use crate::error::{Error, Result};

/// Below this predictive standard deviation a grid point is a point mass.
const MIN_SD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MaxValueSamples {
    pub values: Vec<f64>,
    pub grid_size: usize,
    pub location: f64,
    pub scale: f64,
}

/// `ln P(max ≤ y)` under the independence approximation.
pub fn log_max_cdf(means: &[f64], sds: &[f64], y: f64) -> f64 {
    let mut acc = 0.0;
    for (m, s) in means.iter().zip(sds) {
        if *s > MIN_SD {
            acc += normal::log_cdf((y - m) / s);
        } else if y < *m {
            return f64::NEG_INFINITY;
        }
    }
    acc
}

fn quantile(means: &[f64], sds: &[f64], q: f64, lo: f64, hi: f64) -> f64 {
    let target = q.ln();
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if log_max_cdf(means, sds, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Gumbel `(location, scale)` matching the 0.25 and 0.75 quantiles of the
/// independence approximation.
pub fn fit_gumbel(means: &[f64], sds: &[f64]) -> Result<(f64, f64)> {
    if means.is_empty() || means.len() != sds.len() {
        return Err(Error::Sampling("empty or ragged grid".into()));
    }
    if sds.iter().all(|s| !(*s > MIN_SD)) {
        return Err(Error::Sampling("every grid point has zero predictive variance".into()));
    }
    let lo = means
        .iter()
        .zip(sds)
        .map(|(m, s)| m - 6.0 * s.max(0.0))
        .fold(f64::NEG_INFINITY, f64::max)
        - 1e-9;
    let hi = means.iter().zip(sds).map(|(m, s)| m + 9.0 * s.max(0.0)).fold(f64::NEG_INFINITY, f64::max);
    let y25 = quantile(means, sds, 0.25, lo, hi);
    let y75 = quantile(means, sds, 0.75, lo, hi);
    // Gumbel quantile: y_q = a - b ln(-ln q)
    let (l25, l75) = ((-(0.25f64.ln())).ln(), (-(0.75f64.ln())).ln());
    let scale = ((y75 - y25) / (l25 - l75)).max(1e-12);
    let location = y25 + scale * l25;
    Ok((location, scale))
}

/// Draw `m` samples of `g*` from a Gumbel fitted to the predictions at
/// `grid_size` shifted-Halton points and the `observed` locations.
pub fn sample_gstar<F, R>(
    predict_g: F,
    d: usize,
    observed: &[Vec<f64>],
    m: usize,
    grid_size: usize,
    rng: &mut R,
) -> Result<MaxValueSamples>
where
    F: Fn(&[f64]) -> (f64, f64),
    R: Rng + ?Sized,
{
    if m == 0 || grid_size == 0 {
        return Err(Error::Sampling("need at least one sample and one grid point".into()));
    }
    let grid = design::shifted_halton(grid_size, d, rng);
    let (means, sds): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .chain(observed)
        .map(|x| {
            let (mu, var) = predict_g(x);
            (mu, var.max(0.0).sqrt())
        })
        .unzip();
    samples_from_marginals(&means, &sds, m, grid_size, rng)
}

/// Gumbel samples for explicitly given marginals.
pub fn samples_from_marginals<R: Rng + ?Sized>(
    means: &[f64],
    sds: &[f64],
    m: usize,
    grid_size: usize,
    rng: &mut R,
) -> Result<MaxValueSamples> {
    let (location, scale) = fit_gumbel(means, sds)?;
    let values = (0..m)
        .map(|_| {
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            location - scale * (-u.ln()).ln()
        })
        .collect();
    Ok(MaxValueSamples { values, grid_size, location, scale })
}
