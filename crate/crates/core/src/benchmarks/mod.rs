//! Stochastic test objectives.
//!
//! A benchmark mints realizations (opaque `u64` handles) and evaluates them.
//! Evaluating the same handle at the same point describes the same sample
//! path; how observation noise enters is up to the benchmark.

mod synthetic;
mod warehouse;

use serde::{Deserialize, Serialize};

pub use synthetic::{SyntheticBenchmark, SyntheticConfig};
pub use warehouse::{
    day_streams, order_stream, poisson_times, simulate, simulate_orders, sites, DayTally, Order, OrderEvent, Outcome, WarehouseBenchmark,
    WarehouseConfig,
};

use crate::error::Result;

pub trait Benchmark: Send {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// A fresh realization, never returned before by this instance.
    fn mint(&mut self) -> u64;

    fn evaluate(&mut self, x: &[f64], handle: u64) -> Result<f64>;

    /// The latent objective `g(x)`, or the best available estimate of it.
    fn true_value(&self, x: &[f64]) -> f64;

    fn true_optimum(&self) -> Option<f64>;
}

/// Benchmark section of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkSpec {
    Synthetic(SyntheticConfig),
    Warehouse(WarehouseConfig),
}

impl BenchmarkSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkSpec::Synthetic(_) => "synthetic",
            BenchmarkSpec::Warehouse(_) => "warehouse",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BenchmarkSpec::Synthetic(_) => 1,
            BenchmarkSpec::Warehouse(_) => 4,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        match self {
            BenchmarkSpec::Synthetic(c) => c.validate(),
            BenchmarkSpec::Warehouse(c) => c.validate(),
        }
    }

    pub fn build(&self, seed: u64) -> Result<Box<dyn Benchmark>> {
        Ok(match self {
            BenchmarkSpec::Synthetic(c) => Box::new(SyntheticBenchmark::new(c.clone(), seed)?),
            BenchmarkSpec::Warehouse(c) => Box::new(WarehouseBenchmark::new(c.clone(), seed)?),
        })
    }
}
