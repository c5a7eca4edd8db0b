//! Maximum-likelihood hyperparameter search in log-parameter space.
//!
//! Each restart runs a bounded Nelder–Mead simplex; the best restart wins.
//! Restarts are independent and run on the rayon pool, but their start points
//! are drawn up front from the caller's RNG so results do not depend on
//! scheduling.

use rand::Rng;
use rayon::prelude::*;

use super::kernel::{KernelParams, Matern52};
use super::posterior::fit_gp;
use crate::error::{Error, Result};

/// Axis-aligned box in log-parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LogBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidParameter("log-parameter box has lower > upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, p: &mut [f64]) {
        for ((v, l), u) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| if l == u { *l } else { rng.random_range(*l..=*u) })
            .collect()
    }

    pub fn is_point(&self) -> bool {
        self.lower == self.upper
    }
}

/// Natural-scale bounds for a single-output Matérn GP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub variance: (f64, f64),
    pub noise: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self { lengthscale: (1e-2, 10.0), variance: (1e-4, 1e2), noise: (1e-6, 1.0) }
    }
}

fn ln_pair((lo, hi): (f64, f64)) -> (f64, f64) {
    (lo.ln(), hi.ln())
}

impl HyperBounds {
    /// Log box over `[ln l_1..ln l_d, ln v, ln σ²]`.
    pub fn log_box(&self, d: usize) -> Result<LogBox> {
        let mut lo = Vec::with_capacity(d + 2);
        let mut hi = Vec::with_capacity(d + 2);
        for pair in std::iter::repeat_n(self.lengthscale, d).chain([self.variance, self.noise]) {
            if !(pair.0 > 0.0) {
                return Err(Error::InvalidParameter(format!("bound {pair:?} must be positive")));
            }
            let (l, h) = ln_pair(pair);
            lo.push(l);
            hi.push(h);
        }
        LogBox::new(lo, hi)
    }
}

/// Bounded Nelder–Mead maximization starting from `start`.
///
/// Non-finite objective values rank below every finite value. The returned
/// value is never below `f(start)`.
pub fn nelder_mead_max<F>(f: &F, bounds: &LogBox, start: &[f64], max_evals: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let score = |p: &[f64]| {
        let v = f(p);
        if v.is_finite() {
            -v
        } else {
            f64::INFINITY
        }
    };
    let mut x0 = start.to_vec();
    bounds.clamp(&mut x0);
    let f0 = score(&x0);
    if bounds.is_point() || n == 0 {
        return (x0, -f0);
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.clone(), f0)];
    for i in 0..n {
        let width = bounds.upper[i] - bounds.lower[i];
        let mut p = x0.clone();
        let step = 0.1 * width.max(1e-3);
        p[i] = if p[i] + step <= bounds.upper[i] { p[i] + step } else { p[i] - step };
        bounds.clamp(&mut p);
        let v = score(&p);
        simplex.push((p, v));
    }
    let mut evals = n + 1;

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= 1e-9 * (1.0 + best.abs()) && best.is_finite() {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(p, _)| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> =
                centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect();
            bounds.clamp(&mut p);
            p
        };
        let xr = along(alpha);
        let fr = score(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = score(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(rho);
                let fc = score(&xc);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = score(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (p, v) in simplex.iter_mut().skip(1) {
                    for (pj, bj) in p.iter_mut().zip(&x_best) {
                        *pj = bj + sigma * (*pj - bj);
                    }
                    *v = score(p);
                }
                evals += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (p, v) = simplex.swap_remove(0);
    (p, -v)
}

/// Best of `n_restarts` bounded local searches.
///
/// The first start is `warm_start` when given; the rest are uniform in the
/// box. Fails when no start produced a finite objective value.
pub fn maximize_restarts<F, R>(
    f: &F,
    bounds: &LogBox,
    warm_start: Option<&[f64]>,
    n_restarts: usize,
    max_evals: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
{
    let n_restarts = n_restarts.max(1);
    let mut starts = Vec::with_capacity(n_restarts);
    if let Some(w) = warm_start {
        if w.len() != bounds.dim() {
            return Err(Error::DimensionMismatch { expected: bounds.dim(), got: w.len() });
        }
        starts.push(w.to_vec());
    }
    while starts.len() < n_restarts {
        starts.push(bounds.sample(rng));
    }
    let results: Vec<(Vec<f64>, f64)> =
        starts.par_iter().map(|s| nelder_mead_max(f, bounds, s, max_evals)).collect();
    results
        .into_iter()
        .filter(|(_, v)| v.is_finite())
        .reduce(|best, cand| if cand.1 > best.1 { cand } else { best })
        .ok_or_else(|| Error::FitFailed("no restart produced a finite likelihood".into()))
}

/// Default simplex budget for `p` free parameters.
pub fn default_max_evals(p: usize) -> usize {
    (40 * (p + 1)).max(60)
}

fn unpack(theta: &[f64], d: usize) -> Result<(KernelParams, f64)> {
    let ls = theta[..d].iter().map(|t| t.exp()).collect();
    Ok((KernelParams::new(ls, theta[d].exp())?, theta[d + 1].exp()))
}

fn pack(params: &KernelParams, noise: f64) -> Vec<f64> {
    params
        .lengthscales()
        .iter()
        .map(|l| l.ln())
        .chain([params.variance().ln(), noise.ln()])
        .collect()
}

/// Fit Matérn 5/2 lengthscales, variance and noise by maximizing the log
/// marginal likelihood over random restarts in the log box.
pub fn optimize_hyperparameters<R: Rng + ?Sized>(
    inputs: &[Vec<f64>],
    targets: &[f64],
    bounds: &HyperBounds,
    n_restarts: usize,
    rng: &mut R,
) -> Result<(KernelParams, f64)> {
    optimize_hyperparameters_from(inputs, targets, bounds, None, n_restarts, rng)
}

/// As [`optimize_hyperparameters`], with the first restart at `warm`.
pub fn optimize_hyperparameters_from<R: Rng + ?Sized>(
    inputs: &[Vec<f64>],
    targets: &[f64],
    bounds: &HyperBounds,
    warm: Option<(&KernelParams, f64)>,
    n_restarts: usize,
    rng: &mut R,
) -> Result<(KernelParams, f64)> {
    let d = inputs.first().ok_or(Error::NoObservations)?.len();
    let lbox = bounds.log_box(d)?;
    let objective = |theta: &[f64]| -> f64 {
        let Ok((params, noise)) = unpack(theta, d) else { return f64::NEG_INFINITY };
        match fit_gp(Matern52::new(params), inputs.to_vec(), targets.to_vec(), noise) {
            Ok(post) => post.log_marginal_likelihood(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let warm = warm.map(|(p, n)| {
        let mut w = pack(p, n);
        lbox.clamp(&mut w);
        w
    });
    let (theta, _) = maximize_restarts(
        &objective,
        &lbox,
        warm.as_deref(),
        n_restarts,
        default_max_evals(lbox.dim()),
        rng,
    )?;
    unpack(&theta, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::posterior::log_marginal_likelihood;
    use crate::gp::Kernel;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn simulate(rng: &mut ChaCha8Rng, n: usize, l: f64, v: f64, noise: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random()]).collect();
        let k = Matern52::new(KernelParams::new(vec![l], v).unwrap());
        let mut cov = DMatrix::from_fn(n, n, |i, j| k.cov(&x[i], &x[j]));
        for i in 0..n {
            cov[(i, i)] += noise;
        }
        let chol = nalgebra::Cholesky::new(cov).unwrap();
        let z = nalgebra::DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let y = chol.l() * z;
        (x, y.iter().copied().collect())
    }

    #[test]
    fn nelder_mead_finds_quadratic_max() {
        let b = LogBox::new(vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap();
        let f = |p: &[f64]| -(p[0] - 1.0).powi(2) - (p[1] + 2.0).powi(2);
        let (x, v) = nelder_mead_max(&f, &b, &[0.0, 0.0], 500);
        assert!((x[0] - 1.0).abs() < 1e-3 && (x[1] + 2.0).abs() < 1e-3);
        assert!(v > -1e-6);
    }

    #[test]
    fn nelder_mead_respects_box() {
        let b = LogBox::new(vec![0.0], vec![1.0]).unwrap();
        let f = |p: &[f64]| {
            assert!((0.0..=1.0).contains(&p[0]));
            p[0]
        };
        let (x, _) = nelder_mead_max(&f, &b, &[0.5], 100);
        assert!((x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn recovers_lengthscale_in_most_trials() {
        let truth = 0.2;
        let mut hits = 0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let (x, y) = simulate(&mut rng, 200, truth, 1.0, 0.01);
            let (p, _) = optimize_hyperparameters(&x, &y, &HyperBounds::default(), 3, &mut rng).unwrap();
            let l = p.lengthscales()[0];
            if l > truth / 2.0 && l < truth * 2.0 {
                hits += 1;
            }
        }
        assert!(hits >= 16, "only {hits}/20 within a factor of 2");
    }

    #[test]
    fn never_worse_than_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, y) = simulate(&mut rng, 15, 0.3, 1.0, 0.05);
        let start = KernelParams::new(vec![0.3], 1.0).unwrap();
        let start_ll = log_marginal_likelihood(Matern52::new(start.clone()), x.clone(), y.clone(), 0.05).unwrap();
        let (p, noise) = optimize_hyperparameters_from(
            &x,
            &y,
            &HyperBounds::default(),
            Some((&start, 0.05)),
            1,
            &mut rng,
        )
        .unwrap();
        let ll = log_marginal_likelihood(Matern52::new(p), x, y, noise).unwrap();
        assert!(ll >= start_ll);
    }

    #[test]
    fn collapsed_bounds_return_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y) = simulate(&mut rng, 10, 0.3, 1.0, 0.05);
        let bounds = HyperBounds { lengthscale: (0.25, 0.25), variance: (1.5, 1.5), noise: (0.02, 0.02) };
        let (p, noise) = optimize_hyperparameters(&x, &y, &bounds, 3, &mut rng).unwrap();
        assert!((p.lengthscales()[0] - 0.25).abs() < 1e-12);
        assert!((p.variance() - 1.5).abs() < 1e-12);
        assert!((noise - 0.02).abs() < 1e-12);
    }
}
