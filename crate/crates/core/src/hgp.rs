//! Hierarchical GP surrogate over (location, realization) pairs.
//!
//! The latent objective is `g ~ GP(0, k_g)` and each realization is
//! `f_s ~ GP(g, k_f)`, so
//!
//! ```text
//! Cov(f_s(x), f_s'(x')) = k_g(x, x') + [s = s'] k_f(x, x')
//! Cov(f_s(x), g(x'))    = k_g(x, x')
//! ```
//!
//! Both kernels are Matérn 5/2 with shared lengthscales. The model is a
//! plain GP over augmented inputs `(x, tag)`, so fitting and prediction go
//! through [`crate::gp`].

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{self, fit_gp, matern52_unit, GpPosterior, Kernel, KernelParams, LogBox};

/// Dense index of a realization inside an [`EvaluationPool`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RealizationId(pub u32);

impl std::fmt::Display for RealizationId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A candidate realization: an existing pool member or a not-yet-minted one.
///
/// Two `New` candidates denote the same unseen realization only when their
/// handles match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Realization {
    Pool(RealizationId),
    New(u32),
}

impl Realization {
    fn tag(self) -> Tag {
        match self {
            Realization::Pool(id) => Tag::Pool(id),
            Realization::New(h) => Tag::New(h),
        }
    }
}

/// Second coordinate of an augmented input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Pool(RealizationId),
    New(u32),
    /// The latent objective `g`.
    Latent,
}

impl Tag {
    #[inline]
    fn same_realization(self, other: Tag) -> bool {
        match (self, other) {
            (Tag::Pool(a), Tag::Pool(b)) => a == b,
            (Tag::New(a), Tag::New(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HgpInput {
    pub x: Vec<f64>,
    pub tag: Tag,
}

/// Realizations minted so far, in minting order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationPool {
    /// Benchmark-side handle (seed or cache key) of each member.
    handles: Vec<u64>,
}

impl EvaluationPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, handle: u64) -> RealizationId {
        self.handles.push(handle);
        RealizationId(self.handles.len() as u32 - 1)
    }

    pub fn len(&self) -> usize {
        self.handles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.handles.is_empty()
    }

    pub fn handle(&self, id: RealizationId) -> Option<u64> {
        self.handles.get(id.0 as usize).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = RealizationId> + '_ {
        (0..self.handles.len() as u32).map(RealizationId)
    }

    pub fn contains(&self, id: RealizationId) -> bool {
        (id.0 as usize) < self.handles.len()
    }

    /// Candidate set `S* = S ∪ {NEW}` with the unseen realization tagged `new_handle`.
    pub fn candidates(&self, new_handle: u32) -> Vec<Realization> {
        self.ids().map(Realization::Pool).chain([Realization::New(new_handle)]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HgpParams {
    pub lengthscales: Vec<f64>,
    pub upper_variance: f64,
    pub lower_variance: f64,
    pub noise: f64,
}

impl HgpParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.lengthscales.is_empty() || !self.lengthscales.iter().all(|l| positive(*l)) {
            return Err(Error::InvalidParameter(format!("lengthscales {:?}", self.lengthscales)));
        }
        for (name, v) in [
            ("upper_variance", self.upper_variance),
            ("lower_variance", self.lower_variance),
            ("noise", self.noise),
        ] {
            if !positive(v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn to_log(&self) -> Vec<f64> {
        self.lengthscales
            .iter()
            .map(|l| l.ln())
            .chain([self.upper_variance.ln(), self.lower_variance.ln(), self.noise.ln()])
            .collect()
    }

    fn from_log(theta: &[f64], d: usize) -> Self {
        Self {
            lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
            upper_variance: theta[d].exp(),
            lower_variance: theta[d + 1].exp(),
            noise: theta[d + 2].exp(),
        }
    }
}

/// The two-level covariance over augmented inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct HgpKernel {
    shape: KernelParams,
    upper: f64,
    lower: f64,
}

impl HgpKernel {
    pub fn new(params: &HgpParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            shape: KernelParams::new(params.lengthscales.clone(), 1.0)?,
            upper: params.upper_variance,
            lower: params.lower_variance,
        })
    }

    #[inline]
    fn eval(&self, x: &[f64], s: Tag, x2: &[f64], s2: Tag) -> f64 {
        let corr = matern52_unit(self.shape.scaled_distance(x, x2));
        if s.same_realization(s2) {
            (self.upper + self.lower) * corr
        } else {
            self.upper * corr
        }
    }
}

impl Kernel for HgpKernel {
    type Input = HgpInput;

    fn cov(&self, a: &HgpInput, b: &HgpInput) -> f64 {
        self.eval(&a.x, a.tag, &b.x, b.tag)
    }
}

/// Prior covariance between two augmented inputs.
pub fn hgp_cov(x: &[f64], s: Tag, x2: &[f64], s2: Tag, params: &HgpParams) -> Result<f64> {
    Ok(HgpKernel::new(params)?.eval(x, s, x2, s2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub s: RealizationId,
    pub y: f64,
}

/// Joint Gaussian belief over `(y_s(x), g(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateBelief {
    pub mean_y: f64,
    pub mean_g: f64,
    pub var_y: f64,
    pub var_g: f64,
    pub corr: f64,
}

impl BivariateBelief {
    pub fn cov(&self) -> f64 {
        self.corr * (self.var_y * self.var_g).sqrt()
    }
}

/// Fitted HGP. An empty posterior serves prior predictions.
#[derive(Debug, Clone)]
pub struct HgpPosterior {
    params: HgpParams,
    kernel: HgpKernel,
    observations: Vec<Observation>,
    gp: Option<GpPosterior<HgpKernel>>,
}

/// Condition the HGP on `observations`.
pub fn fit_hgp(observations: &[Observation], params: &HgpParams) -> Result<HgpPosterior> {
    if observations.is_empty() {
        return Err(Error::NoObservations);
    }
    let kernel = HgpKernel::new(params)?;
    let d = params.dim();
    if let Some(o) = observations.iter().find(|o| o.x.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: o.x.len() });
    }
    let inputs = observations.iter().map(|o| HgpInput { x: o.x.clone(), tag: Tag::Pool(o.s) }).collect();
    let targets = observations.iter().map(|o| o.y).collect();
    let gp = fit_gp(kernel.clone(), inputs, targets, params.noise)?;
    Ok(HgpPosterior { params: params.clone(), kernel, observations: observations.to_vec(), gp: Some(gp) })
}

impl HgpPosterior {
    /// Posterior with no data.
    pub fn prior(params: &HgpParams) -> Result<Self> {
        Ok(Self { params: params.clone(), kernel: HgpKernel::new(params)?, observations: Vec::new(), gp: None })
    }

    pub fn params(&self) -> &HgpParams {
        &self.params
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn gp(&self) -> Option<&GpPosterior<HgpKernel>> {
        self.gp.as_ref()
    }

    /// Latent posterior mean and covariance over augmented inputs.
    pub fn latent_joint(&self, inputs: &[&HgpInput]) -> (DVector<f64>, DMatrix<f64>) {
        match &self.gp {
            Some(gp) => gp.predict_joint(inputs),
            None => {
                let m = inputs.len();
                let cov = DMatrix::from_fn(m, m, |i, j| self.kernel.cov(inputs[i], inputs[j]));
                (DVector::zeros(m), cov)
            }
        }
    }

    /// Exact joint predictive of the noisy observation `y_s(x)` and the latent `g(x)`.
    pub fn joint_predict(&self, x: &[f64], s: Realization) -> BivariateBelief {
        let y_in = HgpInput { x: x.to_vec(), tag: s.tag() };
        let g_in = HgpInput { x: x.to_vec(), tag: Tag::Latent };
        let (mu, cov) = self.latent_joint(&[&y_in, &g_in]);
        let var_y = cov[(0, 0)].max(0.0) + self.params.noise;
        let var_g = cov[(1, 1)].max(0.0);
        let corr = if var_g > 0.0 { (cov[(0, 1)] / (var_y * var_g).sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
        BivariateBelief { mean_y: mu[0], mean_g: mu[1], var_y, var_g, corr }
    }

    /// [`Self::joint_predict`] plus the whitened cross-covariance
    /// `L⁻¹ k(X, (x, s))` of the observation, for assembling batch covariances.
    pub fn joint_predict_whitened(&self, x: &[f64], s: Realization) -> (BivariateBelief, DVector<f64>) {
        let y_in = HgpInput { x: x.to_vec(), tag: s.tag() };
        let g_in = HgpInput { x: x.to_vec(), tag: Tag::Latent };
        let prior_y = self.kernel.cov(&y_in, &y_in);
        let prior_g = self.kernel.cov(&g_in, &g_in);
        let prior_yg = self.kernel.cov(&y_in, &g_in);
        let (mean_y, mean_g, vy, vg) = match &self.gp {
            Some(gp) => {
                let (my, vy) = gp.whiten(&y_in);
                let (mg, vg) = gp.whiten(&g_in);
                (my, mg, vy, vg)
            }
            None => (0.0, 0.0, DVector::zeros(0), DVector::zeros(0)),
        };
        let var_y = (prior_y - vy.norm_squared()).max(0.0) + self.params.noise;
        let var_g = (prior_g - vg.norm_squared()).max(0.0);
        let cov = prior_yg - vy.dot(&vg);
        let corr = if var_g > 0.0 { (cov / (var_y * var_g).sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
        (BivariateBelief { mean_y, mean_g, var_y, var_g, corr }, vy)
    }

    /// Prior covariance between two candidate observations.
    pub fn prior_cov(&self, x: &[f64], s: Realization, x2: &[f64], s2: Realization) -> f64 {
        self.kernel.eval(x, s.tag(), x2, s2.tag())
    }

    /// Marginal predictive of the latent objective.
    pub fn predict_g(&self, x: &[f64]) -> (f64, f64) {
        let g_in = HgpInput { x: x.to_vec(), tag: Tag::Latent };
        match &self.gp {
            Some(gp) => gp.predict(&g_in),
            None => (0.0, self.params.upper_variance),
        }
    }

    /// Correlation matrix of the noisy observations `{y_{s_j}(x_j)}`.
    pub fn batch_correlation(&self, batch: &[(Vec<f64>, Realization)]) -> Result<DMatrix<f64>> {
        if batch.is_empty() {
            return Err(Error::InvalidParameter("empty batch".into()));
        }
        let inputs: Vec<HgpInput> =
            batch.iter().map(|(x, s)| HgpInput { x: x.clone(), tag: s.tag() }).collect();
        let refs: Vec<&HgpInput> = inputs.iter().collect();
        let (_, mut cov) = self.latent_joint(&refs);
        for i in 0..cov.nrows() {
            cov[(i, i)] = cov[(i, i)].max(0.0) + self.params.noise;
        }
        covariance_to_correlation(&cov)
    }
}

/// Normalize a covariance matrix to unit diagonal.
pub fn covariance_to_correlation(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sd: Vec<f64> = cov.diagonal().iter().map(|v| v.sqrt()).collect();
    if let Some(v) = sd.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Numerical(format!("zero predictive variance (sd {v})")));
    }
    let n = cov.nrows();
    Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { cov[(i, j)] / (sd[i] * sd[j]) }))
}

/// Natural-scale bounds for the `d + 3` free HGP parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HgpBounds {
    pub lengthscale: (f64, f64),
    pub upper_variance: (f64, f64),
    pub lower_variance: (f64, f64),
    pub noise: (f64, f64),
}

impl Default for HgpBounds {
    fn default() -> Self {
        Self {
            lengthscale: (1e-2, 10.0),
            upper_variance: (1e-4, 1e2),
            lower_variance: (1e-4, 1e2),
            noise: (1e-6, 1.0),
        }
    }
}

impl HgpBounds {
    pub fn log_box(&self, d: usize) -> Result<LogBox> {
        let pairs = std::iter::repeat_n(self.lengthscale, d).chain([
            self.upper_variance,
            self.lower_variance,
            self.noise,
        ]);
        let mut lo = Vec::with_capacity(d + 3);
        let mut hi = Vec::with_capacity(d + 3);
        for (l, h) in pairs {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter(format!("bound ({l}, {h}) must be positive")));
            }
            lo.push(l.ln());
            hi.push(h.ln());
        }
        LogBox::new(lo, hi)
    }
}

/// Maximize the joint marginal likelihood over shared lengthscales, both
/// variances and the noise.
///
/// Needs at least `d + 5` observations on at least two realizations; with a
/// single realization the two variances cannot be told apart.
pub fn fit_hgp_hyperparameters<R: Rng + ?Sized>(
    observations: &[Observation],
    bounds: &HgpBounds,
    warm: Option<&HgpParams>,
    n_restarts: usize,
    rng: &mut R,
) -> Result<HgpParams> {
    let d = observations.first().ok_or(Error::NoObservations)?.x.len();
    let mut realizations: Vec<RealizationId> = observations.iter().map(|o| o.s).collect();
    realizations.sort_unstable();
    realizations.dedup();
    if realizations.len() < 2 {
        return Err(Error::Identifiability(format!(
            "observations cover {} realization(s); at least 2 are needed",
            realizations.len()
        )));
    }
    if observations.len() < d + 5 {
        return Err(Error::Identifiability(format!(
            "{} observations; at least d + 5 = {} are needed",
            observations.len(),
            d + 5
        )));
    }
    let lbox = bounds.log_box(d)?;
    let objective = |theta: &[f64]| -> f64 {
        let params = HgpParams::from_log(theta, d);
        match fit_hgp(observations, &params) {
            Ok(post) => post.gp.as_ref().map_or(f64::NEG_INFINITY, |g| g.log_marginal_likelihood()),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let warm = warm.map(|p| {
        let mut w = p.to_log();
        lbox.clamp(&mut w);
        w
    });
    let (theta, _) = gp::maximize_restarts(
        &objective,
        &lbox,
        warm.as_deref(),
        n_restarts,
        gp::default_max_evals(lbox.dim()),
        rng,
    )?;
    Ok(HgpParams::from_log(&theta, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{Matern52, KernelParams as Kp};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(d: usize, upper: f64, lower: f64, noise: f64) -> HgpParams {
        HgpParams { lengthscales: vec![0.3; d], upper_variance: upper, lower_variance: lower, noise }
    }

    fn random_obs(rng: &mut ChaCha8Rng, n: usize, d: usize, k: u32) -> Vec<Observation> {
        (0..n)
            .map(|i| Observation {
                x: (0..d).map(|_| rng.random()).collect(),
                s: RealizationId(i as u32 % k),
                y: rng.random_range(-1.5..1.5),
            })
            .collect()
    }

    /// Brute-force oracle: explicit covariance assembly and dense inverse.
    fn dense_joint(obs: &[Observation], p: &HgpParams, tests: &[(Vec<f64>, Tag)]) -> (Vec<f64>, DMatrix<f64>) {
        let cov = |x: &[f64], s: Tag, x2: &[f64], s2: Tag| {
            let r: f64 = x.iter().zip(x2).zip(&p.lengthscales).map(|((a, b), l)| ((a - b) / l).powi(2)).sum::<f64>().sqrt();
            let m = (1.0 + 5f64.sqrt() * r + 5.0 * r * r / 3.0) * (-(5f64.sqrt()) * r).exp();
            let same = matches!((s, s2), (Tag::Pool(a), Tag::Pool(b)) if a == b)
                || matches!((s, s2), (Tag::New(a), Tag::New(b)) if a == b);
            p.upper_variance * m + if same { p.lower_variance * m } else { 0.0 }
        };
        let n = obs.len();
        let k = DMatrix::from_fn(n, n, |i, j| {
            cov(&obs[i].x, Tag::Pool(obs[i].s), &obs[j].x, Tag::Pool(obs[j].s)) + if i == j { p.noise } else { 0.0 }
        });
        let kinv = k.try_inverse().unwrap();
        let y = DVector::from_iterator(n, obs.iter().map(|o| o.y));
        let m = tests.len();
        let ks = DMatrix::from_fn(n, m, |i, j| cov(&obs[i].x, Tag::Pool(obs[i].s), &tests[j].0, tests[j].1));
        let kss = DMatrix::from_fn(m, m, |i, j| cov(&tests[i].0, tests[i].1, &tests[j].0, tests[j].1));
        let mean = ks.transpose() * &kinv * y;
        let c = kss - ks.transpose() * &kinv * &ks;
        (mean.iter().copied().collect(), c)
    }

    #[test]
    fn covariance_identities() {
        let p = params(1, 1.0, 0.25, 0.01);
        let x = [0.4];
        let a = Tag::Pool(RealizationId(0));
        let b = Tag::Pool(RealizationId(1));
        assert_eq!(hgp_cov(&x, a, &x, a, &p).unwrap(), 1.25);
        assert_eq!(hgp_cov(&x, a, &x, b, &p).unwrap(), 1.0);
        assert_eq!(hgp_cov(&x, a, &x, Tag::Latent, &p).unwrap(), 1.0);
        assert_eq!(hgp_cov(&x, Tag::New(0), &x, Tag::New(1), &p).unwrap(), 1.0);
        assert_eq!(hgp_cov(&x, Tag::New(2), &x, Tag::New(2), &p).unwrap(), 1.25);
    }

    #[test]
    fn single_realization_matches_plain_gp() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let obs = random_obs(&mut rng, 15, 1, 1);
        let p = params(1, 0.8, 0.3, 0.05);
        let post = fit_hgp(&obs, &p).unwrap();
        let plain = fit_gp(
            Matern52::new(Kp::new(p.lengthscales.clone(), 1.1).unwrap()),
            obs.iter().map(|o| o.x.clone()).collect(),
            obs.iter().map(|o| o.y).collect(),
            0.05,
        )
        .unwrap();
        for i in 0..20 {
            let x = [i as f64 / 19.0];
            let b = post.joint_predict(&x, Realization::Pool(RealizationId(0)));
            let (m, v) = plain.predict(&x.to_vec());
            assert!((b.mean_y - m).abs() < 1e-10);
            assert!((b.var_y - (v + 0.05)).abs() < 1e-10);
        }
    }

    #[test]
    fn joint_predict_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..6 {
            let d = 1 + trial % 2;
            let k = 2 + (trial % 3) as u32;
            let obs = random_obs(&mut rng, 40, d, k);
            let p = HgpParams {
                lengthscales: (0..d).map(|_| rng.random_range(0.1..0.6)).collect(),
                upper_variance: rng.random_range(0.5..2.0),
                lower_variance: rng.random_range(0.05..0.5),
                noise: rng.random_range(0.01..0.1),
            };
            let post = fit_hgp(&obs, &p).unwrap();
            for s in [Realization::Pool(RealizationId(0)), Realization::Pool(RealizationId(1)), Realization::New(0)] {
                let x: Vec<f64> = (0..d).map(|_| rng.random()).collect();
                let b = post.joint_predict(&x, s);
                let (mu, c) = dense_joint(&obs, &p, &[(x.clone(), s.tag()), (x.clone(), Tag::Latent)]);
                let var_y = c[(0, 0)] + p.noise;
                let corr = c[(0, 1)] / (var_y * c[(1, 1)]).sqrt();
                assert!((b.mean_y - mu[0]).abs() < 1e-8);
                assert!((b.mean_g - mu[1]).abs() < 1e-8);
                assert!((b.var_y - var_y).abs() < 1e-8);
                assert!((b.var_g - c[(1, 1)]).abs() < 1e-8);
                assert!((b.corr - corr).abs() < 1e-8);
                let (mg, vg) = post.predict_g(&x);
                assert!((mg - mu[1]).abs() < 1e-8 && (vg - c[(1, 1)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn prior_belief() {
        let p = params(1, 1.0, 0.4, 0.1);
        let obs = vec![Observation { x: vec![0.0], s: RealizationId(0), y: 2.0 }];
        let mut far = p.clone();
        far.lengthscales = vec![1e-3];
        let post = fit_hgp(&obs, &far).unwrap();
        let b = post.joint_predict(&[1.0], Realization::Pool(RealizationId(0)));
        assert!(b.mean_y.abs() < 1e-12 && b.mean_g.abs() < 1e-12);
        assert!((b.var_g - 1.0).abs() < 1e-12);
        assert!((b.var_y - 1.5).abs() < 1e-12);
        assert!((b.corr - (1.0f64 / 1.5).sqrt()).abs() < 1e-12);

        let prior = HgpPosterior::prior(&p).unwrap();
        assert_eq!(prior.predict_g(&[0.5]), (0.0, 1.0));
        let b = prior.joint_predict(&[0.5], Realization::New(0));
        assert!((b.corr - (1.0f64 / 1.5).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_hierarchy_correlation_tends_to_one() {
        let p = params(1, 1.0, 1e-12, 1e-12);
        let prior = HgpPosterior::prior(&p).unwrap();
        let b = prior.joint_predict(&[0.2], Realization::New(0));
        assert!(b.corr > 1.0 - 1e-9);
    }

    #[test]
    fn vanishing_lower_variance_merges_realizations() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let obs = random_obs(&mut rng, 20, 1, 3);
        let post = fit_hgp(&obs, &params(1, 1.0, 1e-10, 0.05)).unwrap();
        for i in 0..10 {
            let x = [i as f64 / 9.0];
            let a = post.joint_predict(&x, Realization::Pool(RealizationId(0)));
            let b = post.joint_predict(&x, Realization::Pool(RealizationId(2)));
            assert!((a.mean_y - b.mean_y).abs() < 1e-6);
            assert!((a.var_y - b.var_y).abs() < 1e-6);
        }
    }

    #[test]
    fn new_realization_is_least_informed() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let obs = random_obs(&mut rng, 30, 2, 3);
        let post = fit_hgp(&obs, &params(2, 1.0, 0.3, 0.02)).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..2).map(|_| rng.random()).collect();
            let new = post.joint_predict(&x, Realization::New(0));
            for s in 0..3 {
                let b = post.joint_predict(&x, Realization::Pool(RealizationId(s)));
                assert!(new.var_y >= b.var_y - 1e-8);
                assert!(b.corr.abs() <= 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn relabeling_leaves_latent_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let obs = random_obs(&mut rng, 25, 1, 3);
        let perm = [2u32, 0, 1];
        let relabeled: Vec<Observation> =
            obs.iter().map(|o| Observation { s: RealizationId(perm[o.s.0 as usize]), ..o.clone() }).collect();
        let p = params(1, 1.0, 0.2, 0.03);
        let a = fit_hgp(&obs, &p).unwrap();
        let b = fit_hgp(&relabeled, &p).unwrap();
        for i in 0..15 {
            let x = [i as f64 / 14.0];
            let (ma, va) = a.predict_g(&x);
            let (mb, vb) = b.predict_g(&x);
            assert!((ma - mb).abs() < 1e-10 && (va - vb).abs() < 1e-10);
        }
    }

    #[test]
    fn batch_correlation_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let obs = random_obs(&mut rng, 20, 1, 2);
        let p = params(1, 1.0, 0.3, 0.05);
        let post = fit_hgp(&obs, &p).unwrap();
        let s0 = Realization::Pool(RealizationId(0));

        let c1 = post.batch_correlation(&[(vec![0.3], s0)]).unwrap();
        assert_eq!(c1[(0, 0)], 1.0);

        let c2 = post.batch_correlation(&[(vec![0.3], s0), (vec![0.3], s0)]).unwrap();
        let b = post.joint_predict(&[0.3], s0);
        let var_f = b.var_y - p.noise;
        assert!((c2[(0, 1)] - var_f / (var_f + p.noise)).abs() < 1e-12);
        assert!(c2.determinant() > 0.0);

        let batch = vec![(vec![0.1], s0), (vec![0.5], Realization::Pool(RealizationId(1))), (vec![0.7], Realization::New(0))];
        let c3 = post.batch_correlation(&batch).unwrap();
        let tests: Vec<(Vec<f64>, Tag)> = batch.iter().map(|(x, s)| (x.clone(), s.tag())).collect();
        let (_, mut dense) = dense_joint(&obs, &p, &tests);
        for i in 0..3 {
            dense[(i, i)] += p.noise;
        }
        for i in 0..3 {
            for j in 0..3 {
                let expected = dense[(i, j)] / (dense[(i, i)] * dense[(j, j)]).sqrt();
                assert!((c3[(i, j)] - expected).abs() < 1e-8);
                assert_eq!(c3[(i, j)], c3[(j, i)]);
            }
        }
        assert!(c3.symmetric_eigenvalues().min() > -1e-10);
    }

    #[test]
    fn single_realization_is_not_identifiable() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let obs = random_obs(&mut rng, 20, 1, 1);
        let err = fit_hgp_hyperparameters(&obs, &HgpBounds::default(), None, 2, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Identifiability(_)));
    }

    #[test]
    fn collapsed_bounds_return_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let obs = random_obs(&mut rng, 20, 1, 2);
        let b = HgpBounds {
            lengthscale: (0.2, 0.2),
            upper_variance: (1.1, 1.1),
            lower_variance: (0.3, 0.3),
            noise: (0.01, 0.01),
        };
        let p = fit_hgp_hyperparameters(&obs, &b, None, 3, &mut rng).unwrap();
        assert!((p.lengthscales[0] - 0.2).abs() < 1e-12);
        assert!((p.upper_variance - 1.1).abs() < 1e-12);
        assert!((p.lower_variance - 0.3).abs() < 1e-12);
        assert!((p.noise - 0.01).abs() < 1e-12);
    }

    #[test]
    fn pool_grows_densely() {
        let mut pool = EvaluationPool::new();
        assert_eq!(pool.push(99), RealizationId(0));
        assert_eq!(pool.push(7), RealizationId(1));
        assert_eq!(pool.handle(RealizationId(1)), Some(7));
        assert_eq!(pool.candidates(0), vec![
            Realization::Pool(RealizationId(0)),
            Realization::Pool(RealizationId(1)),
            Realization::New(0)
        ]);
    }
}
