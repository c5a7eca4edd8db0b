//! Optimization loops: BOSH and the fixed-strategy baselines.
//!
//! One step is one batch (BOSH, batch MES) or one evaluation of a whole
//! `K`-realization strategy (the other baselines). Every model works on
//! targets standardized with the mean and standard deviation of all
//! observations so far.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{self, sample_gstar, AcquisitionContext, MaxValueSamples, MesContext};
use crate::benchmarks::Benchmark;
use crate::design;
use crate::direct::{direct_maximize, propose_batch};
use crate::error::{Error, Result};
use crate::gp::{fit_gp, optimize_hyperparameters_from, GpPosterior, HyperBounds, KernelParams, Matern52};
use crate::hgp::{fit_hgp, fit_hgp_hyperparameters, EvaluationPool, HgpBounds, HgpParams, HgpPosterior, Observation, Realization, RealizationId};
use crate::streams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bosh,
    FixedEi,
    FixedMes,
    Resampled,
    BatchMesSingle,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Bosh, Method::FixedEi, Method::FixedMes, Method::Resampled, Method::BatchMesSingle];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Bosh => "bosh",
            Method::FixedEi => "fixed_ei",
            Method::FixedMes => "fixed_mes",
            Method::Resampled => "resampled",
            Method::BatchMesSingle => "batch_mes_single",
        }
    }

    /// Label used in traces, e.g. `bosh_b5` or `fixed_mes_k1`.
    pub fn label(&self, b_or_k: usize) -> String {
        match self {
            Method::Bosh | Method::BatchMesSingle => format!("{}_b{b_or_k}", self.name()),
            _ => format!("{}_k{b_or_k}", self.name()),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let allowed: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            format!("unknown method `{s}`; allowed: {}", allowed.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// Randomly shifted Halton points.
    Quasi,
    Uniform,
}

/// Surrogate and acquisition settings shared by all methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub restarts: usize,
    pub gstar_samples: usize,
    /// Max-value grid points per input dimension.
    pub grid_per_dim: usize,
    /// DIRECT evaluations per input dimension for every acquisition search.
    pub direct_evals_per_dim: usize,
    pub design: DesignKind,
    /// Largest pool BOSH may grow to; unlimited when absent.
    pub pool_cap: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            restarts: 3,
            gstar_samples: 10,
            grid_per_dim: 1000,
            direct_evals_per_dim: 100,
            design: DesignKind::Quasi,
            pool_cap: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("restarts", self.restarts),
            ("gstar_samples", self.gstar_samples),
            ("grid_per_dim", self.grid_per_dim),
            ("direct_evals_per_dim", self.direct_evals_per_dim),
        ] {
            if v == 0 {
                errs.push(format!("model.{name}: must be ≥ 1, got 0"));
            }
        }
        if let Some(cap) = self.pool_cap {
            if cap < 2 {
                errs.push(format!("model.pool_cap: must be ≥ 2, got {cap}"));
            }
        }
        errs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub b_or_k: usize,
    pub budget_steps: usize,
    pub seed: u64,
    pub model: ModelConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = self.model.validate();
        if self.b_or_k == 0 {
            errs.push("b_or_k: must be ≥ 1, got 0".into());
        }
        if self.budget_steps == 0 {
            errs.push("budget_steps: must be ≥ 1, got 0".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(errs.join("; ")))
        }
    }
}

/// One BO step as reported in traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub cumulative_evals: usize,
    pub batch_size: usize,
    pub pool_size: usize,
    /// Evaluated points with the realization (or strategy) label.
    pub proposed: Vec<(Vec<f64>, String)>,
    pub observed_y: Vec<f64>,
    pub incumbent_x: Vec<f64>,
    pub true_value: f64,
    pub suboptimality: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub label: String,
    pub seed: u64,
    pub records: Vec<StepRecord>,
    /// Set when the run aborted; `records` then holds the completed steps.
    pub failure: Option<String>,
}

/// Affine map of targets to zero mean and unit standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub mean: f64,
    pub scale: f64,
}

impl Standardizer {
    pub fn fit(y: &[f64]) -> Self {
        let n = y.len().max(1) as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        Self { mean, scale }
    }

    pub fn apply(&self, y: f64) -> f64 {
        (y - self.mean) / self.scale
    }
}

struct Streams {
    fit: ChaCha8Rng,
    design: ChaCha8Rng,
    gstar: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            fit: streams::stream(seed, streams::MODEL_FIT, 0),
            design: streams::stream(seed, streams::DESIGN, 0),
            gstar: streams::stream(seed, streams::GSTAR, 0),
        }
    }
}

fn initial_design<R: Rng + ?Sized>(kind: DesignKind, n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    match kind {
        DesignKind::Quasi => design::shifted_halton(n, d, rng),
        DesignKind::Uniform => design::uniform(n, d, rng),
    }
}

fn fmt_label(s: RealizationId) -> String {
    s.0.to_string()
}

fn score_incumbent(bench: &dyn Benchmark, x: &[f64]) -> (f64, Option<f64>) {
    let v = bench.true_value(x);
    (v, bench.true_optimum().map(|opt| opt - v))
}

/// A method's optimization state.
pub trait Optimizer {
    fn step(&mut self) -> Result<StepRecord>;

    /// Argmax of the posterior mean of the objective.
    fn recommend(&mut self) -> Result<Vec<f64>>;

    fn cumulative_evals(&self) -> usize;
}

/// BOSH: hierarchical GP over a growing pool of realizations.
pub struct Bosh {
    config: RunConfig,
    bench: Box<dyn Benchmark>,
    pool: EvaluationPool,
    observations: Vec<Observation>,
    params: Option<HgpParams>,
    bounds: HgpBounds,
    rng: Streams,
    steps: usize,
}

impl Bosh {
    /// `d + 5` evaluations, alternating between two fresh realizations.
    pub fn initialize(config: RunConfig, mut bench: Box<dyn Benchmark>) -> Result<Self> {
        config.validate()?;
        let d = bench.dim();
        let mut rng = Streams::new(config.seed);
        let mut pool = EvaluationPool::new();
        let ids = [pool.push(bench.mint()), pool.push(bench.mint())];
        let xs = initial_design(config.model.design, d + 5, d, &mut rng.design);
        let mut observations = Vec::with_capacity(xs.len());
        for (i, x) in xs.into_iter().enumerate() {
            let s = ids[i % 2];
            let y = bench.evaluate(&x, pool.handle(s).expect("pooled"))?;
            observations.push(Observation { x, s, y });
        }
        Ok(Self { config, bench, pool, observations, params: None, bounds: HgpBounds::default(), rng, steps: 0 })
    }

    pub fn pool(&self) -> &EvaluationPool {
        &self.pool
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn params(&self) -> Option<&HgpParams> {
        self.params.as_ref()
    }

    pub fn benchmark(&self) -> &dyn Benchmark {
        self.bench.as_ref()
    }

    fn standardized(&self) -> Vec<Observation> {
        let st = Standardizer::fit(&self.observations.iter().map(|o| o.y).collect::<Vec<_>>());
        self.observations.iter().map(|o| Observation { x: o.x.clone(), s: o.s, y: st.apply(o.y) }).collect()
    }

    /// Refit hyperparameters and condition on all data. A failed fit is
    /// retried once from fresh random starts without the warm start.
    fn refit(&mut self) -> Result<HgpPosterior> {
        let obs = self.standardized();
        let restarts = self.config.model.restarts;
        let params = match fit_hgp_hyperparameters(&obs, &self.bounds, self.params.as_ref(), restarts, &mut self.rng.fit)
            .and_then(|p| fit_hgp(&obs, &p).map(|post| (p, post)))
        {
            Ok(ok) => ok,
            Err(_) => {
                let p = fit_hgp_hyperparameters(&obs, &self.bounds, None, restarts, &mut self.rng.fit)?;
                let post = fit_hgp(&obs, &p)?;
                (p, post)
            }
        };
        self.params = Some(params.0);
        Ok(params.1)
    }

    fn incumbent(&self, post: &HgpPosterior) -> Result<Vec<f64>> {
        let d = self.bench.dim();
        let r = direct_maximize(|x| post.predict_g(x).0, d, self.config.model.direct_evals_per_dim * d)?;
        Ok(r.x)
    }

    fn sample_gstar(&mut self, post: &HgpPosterior) -> Result<MaxValueSamples> {
        let d = self.bench.dim();
        let observed: Vec<Vec<f64>> = post.observations().iter().map(|o| o.x.clone()).collect();
        let m = &self.config.model;
        sample_gstar(|x| post.predict_g(x), d, &observed, m.gstar_samples, m.grid_per_dim * d, &mut self.rng.gstar)
    }
}

impl Optimizer for Bosh {
    fn step(&mut self) -> Result<StepRecord> {
        let post = self.refit()?;
        let gstar = self.sample_gstar(&post)?;
        let ctx = AcquisitionContext::new(&post, gstar, &self.pool);
        let cap = self.config.model.pool_cap;
        let pool_len = self.pool.len();
        let proposal = propose_batch(
            &ctx,
            |slot, chosen| {
                let minted = chosen.iter().filter(|(_, s)| matches!(s, Realization::New(_))).count();
                let mut arms = ctx.candidates(slot as u32);
                if cap.is_some_and(|c| pool_len + minted >= c) {
                    arms.retain(|s| matches!(s, Realization::Pool(_)));
                }
                arms
            },
            self.config.b_or_k,
            self.config.model.direct_evals_per_dim,
        )?;

        let mut proposed = Vec::with_capacity(proposal.elements.len());
        let mut observed_y = Vec::with_capacity(proposal.elements.len());
        for (x, s) in proposal.elements {
            let id = match s {
                Realization::Pool(id) => id,
                Realization::New(_) => self.pool.push(self.bench.mint()),
            };
            let y = self.bench.evaluate(&x, self.pool.handle(id).expect("pooled"))?;
            proposed.push((x.clone(), fmt_label(id)));
            observed_y.push(y);
            self.observations.push(Observation { x, s: id, y });
        }
        self.steps += 1;

        let params = self.params.clone().expect("fitted above");
        let post = fit_hgp(&self.standardized(), &params)?;
        let incumbent_x = self.incumbent(&post)?;
        let (true_value, suboptimality) = score_incumbent(self.bench.as_ref(), &incumbent_x);
        Ok(StepRecord {
            step: self.steps,
            cumulative_evals: self.observations.len(),
            batch_size: self.config.b_or_k,
            pool_size: self.pool.len(),
            proposed,
            observed_y,
            incumbent_x,
            true_value,
            suboptimality,
        })
    }

    fn recommend(&mut self) -> Result<Vec<f64>> {
        let post = match &self.params {
            Some(p) => fit_hgp(&self.standardized(), p)?,
            None => self.refit()?,
        };
        self.incumbent(&post)
    }

    fn cumulative_evals(&self) -> usize {
        self.observations.len()
    }
}

/// Standard BO on a strategy mean, or batch MES on one realization.
pub struct Baseline {
    config: RunConfig,
    bench: Box<dyn Benchmark>,
    /// Realizations averaged by the current strategy.
    strategy: Vec<u64>,
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    warm: Option<(KernelParams, f64)>,
    bounds: HyperBounds,
    rng: Streams,
    evals: usize,
    steps: usize,
}

impl Baseline {
    /// `d + 3` strategy evaluations, each costing `K` individual ones.
    pub fn initialize(config: RunConfig, mut bench: Box<dyn Benchmark>) -> Result<Self> {
        config.validate()?;
        if config.method == Method::Bosh {
            return Err(Error::InvalidParameter("BOSH is not a baseline".into()));
        }
        let d = bench.dim();
        let k = match config.method {
            Method::BatchMesSingle => 1,
            _ => config.b_or_k,
        };
        let strategy = (0..k).map(|_| bench.mint()).collect();
        let mut rng = Streams::new(config.seed);
        let xs = initial_design(config.model.design, d + 3, d, &mut rng.design);
        let mut me = Self {
            config,
            bench,
            strategy,
            xs: Vec::new(),
            ys: Vec::new(),
            warm: None,
            bounds: HyperBounds::default(),
            rng,
            evals: 0,
            steps: 0,
        };
        for x in xs {
            let y = me.evaluate_strategy(&x)?;
            me.xs.push(x);
            me.ys.push(y);
        }
        Ok(me)
    }

    pub fn strategy(&self) -> &[u64] {
        &self.strategy
    }

    pub fn data(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.xs, &self.ys)
    }

    fn evaluate_strategy(&mut self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for h in self.strategy.clone() {
            total += self.bench.evaluate(x, h)?;
        }
        self.evals += self.strategy.len();
        Ok(total / self.strategy.len() as f64)
    }

    fn refit(&mut self) -> Result<GpPosterior<Matern52>> {
        let st = Standardizer::fit(&self.ys);
        let y: Vec<f64> = self.ys.iter().map(|v| st.apply(*v)).collect();
        let restarts = self.config.model.restarts;
        let warm = self.warm.as_ref().map(|(p, n)| (p, *n));
        let attempt = optimize_hyperparameters_from(&self.xs, &y, &self.bounds, warm, restarts, &mut self.rng.fit)
            .and_then(|(p, n)| fit_gp(Matern52::new(p.clone()), self.xs.clone(), y.clone(), n).map(|g| (p, n, g)));
        let (p, n, post) = match attempt {
            Ok(ok) => ok,
            Err(_) => {
                let (p, n) = optimize_hyperparameters_from(&self.xs, &y, &self.bounds, None, restarts, &mut self.rng.fit)?;
                let g = fit_gp(Matern52::new(p.clone()), self.xs.clone(), y, n)?;
                (p, n, g)
            }
        };
        self.warm = Some((p, n));
        Ok(post)
    }

    fn condition(&self) -> Result<GpPosterior<Matern52>> {
        let (p, n) = self.warm.clone().expect("fitted");
        let st = Standardizer::fit(&self.ys);
        fit_gp(Matern52::new(p), self.xs.clone(), self.ys.iter().map(|v| st.apply(*v)).collect(), n)
    }

    fn incumbent(&self, post: &GpPosterior<Matern52>) -> Result<Vec<f64>> {
        let d = self.bench.dim();
        let r = direct_maximize(|x| post.predict(&x.to_vec()).0, d, self.config.model.direct_evals_per_dim * d)?;
        Ok(r.x)
    }

    fn gstar(&mut self, post: &GpPosterior<Matern52>) -> Result<MaxValueSamples> {
        let d = self.bench.dim();
        let m = &self.config.model;
        sample_gstar(|x| post.predict(&x.to_vec()), d, &self.xs, m.gstar_samples, m.grid_per_dim * d, &mut self.rng.gstar)
    }

    fn strategy_label(&self) -> String {
        match self.config.method {
            Method::BatchMesSingle => "0".into(),
            _ => "S".into(),
        }
    }
}

impl Optimizer for Baseline {
    fn step(&mut self) -> Result<StepRecord> {
        let d = self.bench.dim();
        let budget = self.config.model.direct_evals_per_dim * d;
        let post = self.refit()?;
        let points: Vec<Vec<f64>> = match self.config.method {
            Method::FixedEi => {
                let st = Standardizer::fit(&self.ys);
                let best = self.ys.iter().map(|v| st.apply(*v)).fold(f64::NEG_INFINITY, f64::max);
                let r = direct_maximize(
                    |x| {
                        let (mu, var) = post.predict(&x.to_vec());
                        acquisition::expected_improvement(mu, var.sqrt(), best)
                    },
                    d,
                    budget,
                )?;
                vec![r.x]
            }
            Method::FixedMes | Method::Resampled => {
                let ctx = MesContext { posterior: &post, gstar: self.gstar(&post)? };
                vec![direct_maximize(|x| ctx.mes(x), d, budget)?.x]
            }
            Method::BatchMesSingle => {
                let ctx = MesContext { posterior: &post, gstar: self.gstar(&post)? };
                let p = propose_batch(&ctx, |_, _| vec![()], self.config.b_or_k, self.config.model.direct_evals_per_dim)?;
                p.elements.into_iter().map(|(x, _)| x).collect()
            }
            Method::Bosh => unreachable!("rejected at initialization"),
        };

        if self.config.method == Method::Resampled {
            let k = self.strategy.len();
            self.strategy = (0..k).map(|_| self.bench.mint()).collect();
        }
        let label = self.strategy_label();
        let mut proposed = Vec::with_capacity(points.len());
        let mut observed_y = Vec::with_capacity(points.len());
        for x in points {
            let y = self.evaluate_strategy(&x)?;
            proposed.push((x.clone(), label.clone()));
            observed_y.push(y);
            self.xs.push(x);
            self.ys.push(y);
        }
        self.steps += 1;

        let post = self.condition()?;
        let incumbent_x = self.incumbent(&post)?;
        let (true_value, suboptimality) = score_incumbent(self.bench.as_ref(), &incumbent_x);
        Ok(StepRecord {
            step: self.steps,
            cumulative_evals: self.evals,
            batch_size: self.config.b_or_k,
            pool_size: self.strategy.len(),
            proposed,
            observed_y,
            incumbent_x,
            true_value,
            suboptimality,
        })
    }

    fn recommend(&mut self) -> Result<Vec<f64>> {
        let post = if self.warm.is_some() { self.condition()? } else { self.refit()? };
        self.incumbent(&post)
    }

    fn cumulative_evals(&self) -> usize {
        self.evals
    }
}

/// Initialize the optimizer `config.method` calls for.
pub fn initialize(config: RunConfig, bench: Box<dyn Benchmark>) -> Result<Box<dyn Optimizer>> {
    Ok(match config.method {
        Method::Bosh => Box::new(Bosh::initialize(config, bench)?),
        _ => Box::new(Baseline::initialize(config, bench)?),
    })
}

/// Run `config.budget_steps` steps. Failures end the run early and are
/// reported in the trace rather than returned.
pub fn run(config: &RunConfig, bench: Box<dyn Benchmark>) -> RunTrace {
    let mut trace =
        RunTrace { label: config.method.label(config.b_or_k), seed: config.seed, records: Vec::new(), failure: None };
    let mut opt = match initialize(config.clone(), bench) {
        Ok(o) => o,
        Err(e) => {
            trace.failure = Some(format!("initialization: {e}"));
            return trace;
        }
    };
    for step in 1..=config.budget_steps {
        match opt.step() {
            Ok(r) => trace.records.push(r),
            Err(e) => {
                trace.failure = Some(format!("step {step}: {e}"));
                break;
            }
        }
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{SyntheticBenchmark, SyntheticConfig};

    fn quick_model() -> ModelConfig {
        ModelConfig { restarts: 1, grid_per_dim: 200, direct_evals_per_dim: 40, ..Default::default() }
    }

    fn bench(seed: u64) -> Box<dyn Benchmark> {
        Box::new(SyntheticBenchmark::new(SyntheticConfig { grid_size: 300, ..Default::default() }, seed).unwrap())
    }

    fn config(method: Method, b_or_k: usize, steps: usize) -> RunConfig {
        RunConfig { method, b_or_k, budget_steps: steps, seed: 3, model: quick_model() }
    }

    #[test]
    fn bosh_initialization_counts() {
        let b = Bosh::initialize(config(Method::Bosh, 2, 1), bench(0)).unwrap();
        assert_eq!(b.observations().len(), 6);
        assert_eq!(b.pool().len(), 2);
        let on_first = b.observations().iter().filter(|o| o.s == RealizationId(0)).count();
        assert_eq!(on_first, 3);
    }

    #[test]
    fn baseline_initialization_counts() {
        let b = Baseline::initialize(config(Method::FixedMes, 5, 1), bench(0)).unwrap();
        assert_eq!(b.cumulative_evals(), 20);
        assert_eq!(b.data().0.len(), 4);
        assert_eq!(b.strategy().len(), 5);
    }

    #[test]
    fn strategy_observations_are_means() {
        let cfg = SyntheticConfig { grid_size: 300, noise: 0.0, ..Default::default() };
        let b = Baseline::initialize(config(Method::FixedEi, 3, 1), Box::new(SyntheticBenchmark::new(cfg.clone(), 1).unwrap()))
            .unwrap();
        let mut replay = SyntheticBenchmark::new(cfg, 1).unwrap();
        let hs: Vec<u64> = (0..3).map(|_| replay.mint()).collect();
        let (xs, ys) = b.data();
        for (x, y) in xs.iter().zip(ys) {
            let mean = hs.iter().map(|h| replay.evaluate(x, *h).unwrap()).sum::<f64>() / 3.0;
            assert!((mean - y).abs() < 1e-12);
        }
    }

    #[test]
    fn bosh_accounting_and_pool_growth() {
        let cfg = config(Method::Bosh, 3, 3);
        let trace = run(&cfg, bench(1));
        assert!(trace.failure.is_none(), "{:?}", trace.failure);
        let mut prev_pool = 2;
        for (n, r) in trace.records.iter().enumerate() {
            assert_eq!(r.cumulative_evals, 6 + (n + 1) * 3);
            assert!(r.pool_size >= prev_pool);
            prev_pool = r.pool_size;
            assert!(r.incumbent_x.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(r.suboptimality.unwrap() >= 0.0);
        }
    }

    #[test]
    fn pool_cap_is_respected() {
        let mut cfg = config(Method::Bosh, 4, 3);
        cfg.model.pool_cap = Some(3);
        let trace = run(&cfg, bench(2));
        assert!(trace.failure.is_none());
        assert!(trace.records.iter().all(|r| r.pool_size <= 3));
    }

    #[test]
    fn baselines_account_per_step() {
        for (method, k, per_step, init) in [
            (Method::FixedEi, 2, 2, 8),
            (Method::FixedMes, 1, 1, 4),
            (Method::Resampled, 2, 2, 8),
            (Method::BatchMesSingle, 3, 3, 4),
        ] {
            let trace = run(&config(method, k, 2), bench(4));
            assert!(trace.failure.is_none(), "{method:?}: {:?}", trace.failure);
            for (n, r) in trace.records.iter().enumerate() {
                assert_eq!(r.cumulative_evals, init + (n + 1) * per_step, "{method:?}");
            }
        }
    }

    #[test]
    fn resampled_strategy_changes() {
        let cfg = config(Method::Resampled, 2, 1);
        let mut b = Baseline::initialize(cfg, bench(5)).unwrap();
        let before = b.strategy().to_vec();
        b.step().unwrap();
        assert!(b.strategy().iter().all(|h| !before.contains(h)));
    }

    #[test]
    fn runs_are_reproducible() {
        for method in [Method::Bosh, Method::FixedEi, Method::BatchMesSingle] {
            let cfg = config(method, 2, 2);
            assert_eq!(run(&cfg, bench(6)), run(&cfg, bench(6)));
        }
    }

    #[test]
    fn recommendation_after_initialization() {
        let mut b = Bosh::initialize(config(Method::Bosh, 1, 1), bench(7)).unwrap();
        let x = b.recommend().unwrap();
        assert!(x.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        let mut f = Baseline::initialize(config(Method::FixedEi, 1, 1), bench(7)).unwrap();
        let x = f.recommend().unwrap();
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        let err = "bosch".parse::<Method>().unwrap_err();
        assert!(err.contains("allowed") && err.contains("batch_mes_single"));
        assert_eq!(Method::Bosh.label(5), "bosh_b5");
        assert_eq!(Method::FixedMes.label(1), "fixed_mes_k1");
    }
}
