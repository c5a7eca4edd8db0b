use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use bosh_core::benchmarks::{BenchmarkSpec, SyntheticBenchmark, WarehouseBenchmark};
use bosh_core::experiment::{benchmark_seed, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "bosh", version, about = "Bayesian optimization of stochastic objectives over realization pools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method × repetition in the config and write trace.csv and manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Repetitions to run concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Check a config and print it with every default filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the true optimum of the configured benchmark for each repetition.
    BenchOracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dump one simulated warehouse day as JSON lines, one order per line.
    SimLog {
        #[arg(long)]
        config: PathBuf,
        /// Warehouse sites as `x1,y1,x2,y2`.
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        /// Day seed (realization handle).
        #[arg(long, default_value_t = 0)]
        day: u64,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &PathBuf) -> Result<bosh_core::experiment::Resolved> {
    ExperimentConfig::load(path).map_err(|errs| {
        let mut msg = format!("{} problem(s) in {}:", errs.len(), path.display());
        for e in errs {
            msg.push_str("\n  - ");
            msg.push_str(&e);
        }
        anyhow::anyhow!(msg)
    })
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out, seed, parallel } => {
            let mut cfg = load(&config)?.config;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            let Some(out) = out.or_else(|| cfg.output_dir.clone()) else {
                bail!("no output directory: pass --out or set output_dir in the config");
            };
            let manifest = run_experiment(&cfg, &out, parallel).with_context(|| format!("writing results to {}", out.display()))?;
            let failed: Vec<_> = manifest.runs.iter().filter(|r| r.status != "ok").collect();
            eprintln!("{} runs, {} failed; results in {}", manifest.runs.len(), failed.len(), out.display());
            for r in &failed {
                eprintln!("  {} rep {}: {}", r.method, r.rep, r.error.as_deref().unwrap_or("unknown error"));
            }
            Ok(if failed.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Validate { config } => {
            let resolved = load(&config)?;
            print!("{}", resolved.config.to_toml());
            if !resolved.defaults.is_empty() {
                println!("\n# defaults applied:");
                for d in &resolved.defaults {
                    println!("#   {d}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::BenchOracle { config, seed } => {
            let cfg = load(&config)?.config;
            let base = seed.unwrap_or(cfg.base_seed);
            match &cfg.benchmark {
                BenchmarkSpec::Synthetic(c) => {
                    println!("rep,seed,x_star,g_star");
                    for rep in 0..cfg.repetitions {
                        let s = base + rep as u64;
                        let b = SyntheticBenchmark::new(c.clone(), benchmark_seed(s))?;
                        let (x, g) = b.optimum();
                        println!("{rep},{s},{x},{g}");
                    }
                }
                BenchmarkSpec::Warehouse(c) => {
                    // the oracle uses a fixed day stream, so one reference serves every repetition
                    let b = WarehouseBenchmark::new(c.clone(), benchmark_seed(base))?;
                    let (x, rho) = b.reference_optimum();
                    let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                    println!("x_star,rho_star");
                    println!("{},{rho}", xs.join(";"));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SimLog { config, x, day, out } => {
            let cfg = load(&config)?.config;
            let BenchmarkSpec::Warehouse(c) = &cfg.benchmark else {
                bail!("sim-log needs a warehouse benchmark, the config has `{}`", cfg.benchmark.name());
            };
            if x.len() != 4 {
                bail!("--x needs 4 comma-separated coordinates, got {}", x.len());
            }
            let b = WarehouseBenchmark::new(c.clone(), 0)?;
            let mut sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
                None => Box::new(std::io::stdout().lock()),
            };
            for event in b.event_log(&x, day) {
                writeln!(sink, "{}", serde_json::to_string(&event)?)?;
            }
            sink.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
