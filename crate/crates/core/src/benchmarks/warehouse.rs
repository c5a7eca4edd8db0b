//! Two-warehouse delivery simulator.
//!
//! One realization is one simulated day. Orders arrive as a non-homogeneous
//! Poisson process over the unit square and go to the closest warehouse,
//! whose trucks take jobs first-come first-served: a truck drives out,
//! delivers, and drives back before its next job. An order is on time when
//! its wait for a truck plus the outbound drive is within the deadline.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::Benchmark;
use crate::direct::direct_maximize;
use crate::error::{Error, Result};
use crate::streams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WarehouseConfig {
    pub trucks_per_warehouse: usize,
    /// Minutes.
    pub deadline: f64,
    /// Minutes in one simulated day.
    pub horizon: f64,
    /// Unit-square lengths per minute.
    pub speed: f64,
    /// Peak arrival rate, orders per minute.
    pub peak_rate: f64,
    pub mixture_centers: Vec<[f64; 2]>,
    pub mixture_sd: f64,
    /// Days pooled by the high-replication oracle.
    pub oracle_days: usize,
    /// DIRECT evaluations spent locating the reference optimum of the oracle.
    pub reference_evals: usize,
}

impl Default for WarehouseConfig {
    fn default() -> Self {
        Self {
            trucks_per_warehouse: 10,
            deadline: 60.0,
            horizon: 1440.0,
            speed: 0.05,
            peak_rate: 1.0,
            mixture_centers: vec![[0.25, 0.7], [0.75, 0.3]],
            mixture_sd: 0.12,
            oracle_days: 100,
            reference_evals: 400,
        }
    }
}

impl WarehouseConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let positive = |name: &str, v: f64, errs: &mut Vec<String>| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("benchmark.{name}: must be > 0, got {v}"));
            }
        };
        if self.trucks_per_warehouse == 0 {
            errs.push("benchmark.trucks_per_warehouse: must be ≥ 1, got 0".into());
        }
        positive("deadline", self.deadline, &mut errs);
        positive("horizon", self.horizon, &mut errs);
        positive("speed", self.speed, &mut errs);
        positive("mixture_sd", self.mixture_sd, &mut errs);
        if !(self.peak_rate >= 0.0 && self.peak_rate.is_finite()) {
            errs.push(format!("benchmark.peak_rate: must be ≥ 0, got {}", self.peak_rate));
        }
        if self.mixture_centers.is_empty() {
            errs.push("benchmark.mixture_centers: need at least one center".into());
        }
        if self.oracle_days == 0 {
            errs.push("benchmark.oracle_days: must be ≥ 1, got 0".into());
        }
        if self.reference_evals == 0 {
            errs.push("benchmark.reference_evals: must be ≥ 1, got 0".into());
        }
        errs
    }

    /// Arrival rate at minute `t`: zero at midnight, peaking at midday.
    pub fn intensity(&self, t: f64) -> f64 {
        0.5 * self.peak_rate * (1.0 + (2.0 * PI * t / self.horizon - PI / 2.0).sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub time: f64,
    pub location: [f64; 2],
}

/// Event times of a Poisson process with intensity `rate(t) ≤ rate_max` on
/// `[0, horizon]`, by thinning a homogeneous process at `rate_max`.
pub fn poisson_times<R, F>(rate: F, rate_max: f64, horizon: f64, rng: &mut R) -> Vec<f64>
where
    R: Rng + ?Sized,
    F: Fn(f64) -> f64,
{
    let mut out = Vec::new();
    if !(rate_max > 0.0) {
        return out;
    }
    let gap = Exp::new(rate_max).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t > horizon {
            return out;
        }
        if rng.random::<f64>() * rate_max < rate(t) {
            out.push(t);
        }
    }
}

/// One day's orders for day seed `seed`.
pub fn order_stream(config: &WarehouseConfig, seed: u64) -> Vec<Order> {
    let mut rng = streams::stream(seed, "warehouse-orders", 0);
    let times = poisson_times(|t| config.intensity(t), config.peak_rate, config.horizon, &mut rng);
    let spread = Normal::new(0.0, config.mixture_sd).expect("positive sd");
    times
        .into_iter()
        .map(|time| {
            let c = config.mixture_centers[rng.random_range(0..config.mixture_centers.len())];
            // rejection keeps the mixture truncated to the square
            let location = loop {
                let p = [c[0] + spread.sample(&mut rng), c[1] + spread.sample(&mut rng)];
                if p.iter().all(|v| (0.0..=1.0).contains(v)) {
                    break p;
                }
            };
            Order { time, location }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    OnTime,
    Late,
    /// No truck became free before the end of the day.
    Undelivered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEvent {
    pub time: f64,
    pub location: [f64; 2],
    pub warehouse: usize,
    pub wait: f64,
    pub travel: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DayTally {
    pub on_time: usize,
    pub late: usize,
    pub undelivered: usize,
}

impl DayTally {
    pub fn total(&self) -> usize {
        self.on_time + self.late + self.undelivered
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Run one day with warehouses at `sites`, calling `log` for every order.
pub fn simulate_orders(config: &WarehouseConfig, sites: &[[f64; 2]], orders: &[Order], mut log: impl FnMut(OrderEvent)) -> DayTally {
    let mut free_at = vec![vec![0.0f64; config.trucks_per_warehouse]; sites.len()];
    let mut tally = DayTally::default();
    for o in orders {
        let (w, d) = sites
            .iter()
            .enumerate()
            .map(|(i, s)| (i, dist(*s, o.location)))
            .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        let trucks = &mut free_at[w];
        let (k, ready) = trucks
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, t)| if *t < acc.1 { (i, *t) } else { acc });
        let dispatch = ready.max(o.time);
        let travel = d / config.speed;
        let wait = dispatch - o.time;
        let outcome = if dispatch > config.horizon {
            Outcome::Undelivered
        } else {
            trucks[k] = dispatch + 2.0 * travel;
            if wait + travel <= config.deadline {
                Outcome::OnTime
            } else {
                Outcome::Late
            }
        };
        match outcome {
            Outcome::OnTime => tally.on_time += 1,
            Outcome::Late => tally.late += 1,
            Outcome::Undelivered => tally.undelivered += 1,
        }
        log(OrderEvent { time: o.time, location: o.location, warehouse: w, wait, travel, outcome });
    }
    tally
}

/// Map the decision vector `(x1, y1, x2, y2)` to warehouse sites.
pub fn sites(x: &[f64]) -> Vec<[f64; 2]> {
    x.chunks(2).map(|c| [c[0], c[1]]).collect()
}

/// Order streams of `days` days whose seeds are substreams of `seed`.
pub fn day_streams(config: &WarehouseConfig, days: usize, seed: u64) -> Vec<Vec<Order>> {
    (0..days as u64).map(|day| order_stream(config, streams::derive_seed(seed, "warehouse-day", day))).collect()
}

/// Proportion of on-time orders pooled over `days` days whose seeds are
/// substreams of `seed`. With no orders at all the proportion is 1.
pub fn simulate(config: &WarehouseConfig, x: &[f64], days: usize, seed: u64) -> f64 {
    pooled(config, x, &day_streams(config, days, seed))
}

fn pooled(config: &WarehouseConfig, x: &[f64], days: &[Vec<Order>]) -> f64 {
    let s = sites(x);
    let (mut on_time, mut total) = (0usize, 0usize);
    for orders in days {
        let t = simulate_orders(config, &s, orders, |_| {});
        on_time += t.on_time;
        total += t.total();
    }
    if total == 0 {
        1.0
    } else {
        on_time as f64 / total as f64
    }
}

/// Seed of the oracle's day stream; optimization days never use it.
const ORACLE_SEED: u64 = 0x0AC1_E5EE_D000_0001;

pub struct WarehouseBenchmark {
    config: WarehouseConfig,
    seed: u64,
    minted: u64,
    oracle_days: OnceLock<Vec<Vec<Order>>>,
    reference: OnceLock<(Vec<f64>, f64)>,
}

impl WarehouseBenchmark {
    pub fn new(config: WarehouseConfig, seed: u64) -> Result<Self> {
        let errs = config.validate();
        if !errs.is_empty() {
            return Err(Error::Benchmark(errs.join("; ")));
        }
        Ok(Self { config, seed, minted: 0, oracle_days: OnceLock::new(), reference: OnceLock::new() })
    }

    pub fn config(&self) -> &WarehouseConfig {
        &self.config
    }

    /// High-replication estimate of the on-time proportion.
    pub fn oracle(&self, x: &[f64]) -> f64 {
        let days = self.oracle_days.get_or_init(|| day_streams(&self.config, self.config.oracle_days, ORACLE_SEED));
        pooled(&self.config, x, days)
    }

    /// Best oracle value DIRECT finds with `reference_evals` evaluations.
    /// An approximation of the true optimum.
    pub fn reference_optimum(&self) -> &(Vec<f64>, f64) {
        self.reference.get_or_init(|| {
            let r = direct_maximize(|x| self.oracle(x), 4, self.config.reference_evals)
                .expect("oracle values are finite proportions");
            (r.x, r.value)
        })
    }

    /// Per-order records of one realization at `x`.
    pub fn event_log(&self, x: &[f64], handle: u64) -> Vec<OrderEvent> {
        let orders = order_stream(&self.config, handle);
        let mut log = Vec::with_capacity(orders.len());
        simulate_orders(&self.config, &sites(x), &orders, |e| log.push(e));
        log
    }
}

impl Benchmark for WarehouseBenchmark {
    fn name(&self) -> &str {
        "warehouse"
    }

    fn dim(&self) -> usize {
        4
    }

    fn mint(&mut self) -> u64 {
        let handle = streams::derive_seed(self.seed, "warehouse-day", self.minted);
        self.minted += 1;
        handle
    }

    fn evaluate(&mut self, x: &[f64], handle: u64) -> Result<f64> {
        if x.len() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, got: x.len() });
        }
        let orders = order_stream(&self.config, handle);
        let t = simulate_orders(&self.config, &sites(x), &orders, |_| {});
        Ok(if t.total() == 0 { 1.0 } else { t.on_time as f64 / t.total() as f64 })
    }

    fn true_value(&self, x: &[f64]) -> f64 {
        self.oracle(x)
    }

    fn true_optimum(&self) -> Option<f64> {
        Some(self.reference_optimum().1)
    }
}
