//! Experiment configs, method × repetition grids, and result files.
//!
//! Configs are TOML:
//!
//! ```toml
//! budget_steps = 30
//! repetitions = 20        # default 20
//! base_seed = 0           # default 0
//!
//! [benchmark]
//! kind = "synthetic"      # or "warehouse"
//! lower_variance = 0.5
//!
//! [model]                 # optional, see `ModelConfig`
//! restarts = 3
//!
//! [[methods]]
//! method = "bosh"
//! b_or_k = 5
//! ```
//!
//! Validation reports every problem it finds, not only the first.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarks::BenchmarkSpec;
use crate::engine::{self, Method, ModelConfig, RunConfig, RunTrace, StepRecord};
use crate::streams;

pub const DEFAULT_REPETITIONS: usize = 20;

pub const TRACE_HEADER: [&str; 11] = [
    "method",
    "rep",
    "step",
    "cumulative_evals",
    "batch_size",
    "pool_size",
    "proposed",
    "observed_y",
    "incumbent_x",
    "true_value",
    "suboptimality",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub b_or_k: usize,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        self.method.label(self.b_or_k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub budget_steps: usize,
    pub repetitions: usize,
    pub base_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub benchmark: BenchmarkSpec,
    pub model: ModelConfig,
    pub methods: Vec<MethodSpec>,
}

/// A config that passed validation, with every default it relied on.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub defaults: Vec<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Resolved, Vec<String>> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| vec![format!("syntax: {}", e.message())])?;
        let mut errs = Vec::new();
        let mut defaults = Vec::new();

        for key in table.keys() {
            if !["budget_steps", "repetitions", "base_seed", "output_dir", "benchmark", "model", "methods"].contains(&key.as_str()) {
                errs.push(format!("{key}: unknown field"));
            }
        }

        let budget_steps = match table.get("budget_steps") {
            None => {
                errs.push("budget_steps: missing required field".into());
                None
            }
            Some(v) => positive_int("budget_steps", v, &mut errs),
        };
        let repetitions = match table.get("repetitions") {
            None => {
                defaults.push(format!("repetitions = {DEFAULT_REPETITIONS}"));
                Some(DEFAULT_REPETITIONS)
            }
            Some(v) => positive_int("repetitions", v, &mut errs),
        };
        let base_seed = match table.get("base_seed") {
            None => {
                defaults.push("base_seed = 0".into());
                Some(0)
            }
            Some(toml::Value::Integer(i)) if *i >= 0 => Some(*i as u64),
            Some(v) => {
                errs.push(format!("base_seed: expected a non-negative integer, got {v}"));
                None
            }
        };
        let output_dir = match table.get("output_dir") {
            None => None,
            Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
            Some(v) => {
                errs.push(format!("output_dir: expected a string, got {v}"));
                None
            }
        };

        let benchmark = match table.get("benchmark") {
            None => {
                errs.push("benchmark: missing required section".into());
                None
            }
            Some(v) => match v.clone().try_into::<BenchmarkSpec>() {
                Ok(spec) => {
                    let given = v.as_table().cloned().unwrap_or_default();
                    defaults.extend(applied_defaults("benchmark", &given, &spec));
                    errs.extend(spec.validate());
                    Some(spec)
                }
                Err(e) => {
                    errs.push(format!("benchmark: {}", e.message()));
                    None
                }
            },
        };

        let model = match table.get("model") {
            None => {
                let m = ModelConfig::default();
                defaults.extend(applied_defaults("model", &toml::Table::new(), &m));
                Some(m)
            }
            Some(v) => match v.clone().try_into::<ModelConfig>() {
                Ok(m) => {
                    let given = v.as_table().cloned().unwrap_or_default();
                    defaults.extend(applied_defaults("model", &given, &m));
                    errs.extend(m.validate());
                    Some(m)
                }
                Err(e) => {
                    errs.push(format!("model: {}", e.message()));
                    None
                }
            },
        };

        let methods = match table.get("methods") {
            None => {
                errs.push("methods: missing required field".into());
                None
            }
            Some(toml::Value::Array(items)) if items.is_empty() => {
                errs.push("methods: need at least one method".into());
                None
            }
            Some(toml::Value::Array(items)) => {
                let parsed: Vec<Option<MethodSpec>> =
                    items.iter().enumerate().map(|(i, item)| method_spec(i, item, &mut errs)).collect();
                parsed.into_iter().collect::<Option<Vec<_>>>()
            }
            Some(v) => {
                errs.push(format!("methods: expected an array of tables, got {v}"));
                None
            }
        };

        if let Some(ms) = &methods {
            for (i, a) in ms.iter().enumerate() {
                if ms[..i].iter().any(|b| b.label() == a.label()) {
                    errs.push(format!("methods[{i}]: duplicate of `{}`", a.label()));
                }
            }
        }

        if !errs.is_empty() {
            return Err(errs);
        }
        Ok(Resolved {
            config: ExperimentConfig {
                budget_steps: budget_steps.expect("checked"),
                repetitions: repetitions.expect("checked"),
                base_seed: base_seed.expect("checked"),
                output_dir,
                benchmark: benchmark.expect("checked"),
                model: model.expect("checked"),
                methods: methods.expect("checked"),
            },
            defaults,
        })
    }

    pub fn load(path: &Path) -> Result<Resolved, Vec<String>> {
        let text = fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn run_config(&self, spec: &MethodSpec, rep: usize) -> RunConfig {
        RunConfig {
            method: spec.method,
            b_or_k: spec.b_or_k,
            budget_steps: self.budget_steps,
            seed: self.base_seed + rep as u64,
            model: self.model.clone(),
        }
    }
}

fn positive_int(name: &str, v: &toml::Value, errs: &mut Vec<String>) -> Option<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 1 => Some(*i as usize),
        toml::Value::Integer(i) => {
            errs.push(format!("{name}: must be ≥ 1, got {i}"));
            None
        }
        other => {
            errs.push(format!("{name}: expected an integer, got {other}"));
            None
        }
    }
}

fn method_spec(i: usize, item: &toml::Value, errs: &mut Vec<String>) -> Option<MethodSpec> {
    let Some(t) = item.as_table() else {
        errs.push(format!("methods[{i}]: expected a table"));
        return None;
    };
    for key in t.keys() {
        if key != "method" && key != "b_or_k" {
            errs.push(format!("methods[{i}].{key}: unknown field"));
        }
    }
    let method = match t.get("method") {
        Some(toml::Value::String(s)) => match s.parse::<Method>() {
            Ok(m) => Some(m),
            Err(e) => {
                errs.push(format!("methods[{i}].method: {e}"));
                None
            }
        },
        Some(v) => {
            errs.push(format!("methods[{i}].method: expected a string, got {v}"));
            None
        }
        None => {
            errs.push(format!("methods[{i}].method: missing required field"));
            None
        }
    };
    let b_or_k = match t.get("b_or_k") {
        Some(v) => positive_int(&format!("methods[{i}].b_or_k"), v, errs),
        None => {
            errs.push(format!("methods[{i}].b_or_k: missing required field"));
            None
        }
    };
    Some(MethodSpec { method: method?, b_or_k: b_or_k? })
}

/// `prefix.key = value` for every field of `resolved` not present in `given`.
fn applied_defaults<T: Serialize>(prefix: &str, given: &toml::Table, resolved: &T) -> Vec<String> {
    let Ok(toml::Value::Table(full)) = toml::Value::try_from(resolved) else { return Vec::new() };
    full.iter()
        .filter(|(k, _)| !given.contains_key(*k))
        .map(|(k, v)| format!("{prefix}.{k} = {v}"))
        .collect()
}

fn join(v: &[f64], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

/// The eleven trace fields of one step.
pub fn trace_row(label: &str, rep: usize, r: &StepRecord) -> [String; 11] {
    let proposed = r.proposed.iter().map(|(x, s)| format!("{}@{s}", join(x, ";"))).collect::<Vec<_>>().join("|");
    [
        label.to_string(),
        rep.to_string(),
        r.step.to_string(),
        r.cumulative_evals.to_string(),
        r.batch_size.to_string(),
        r.pool_size.to_string(),
        proposed,
        join(&r.observed_y, ";"),
        join(&r.incumbent_x, ";"),
        r.true_value.to_string(),
        r.suboptimality.map(|v| v.to_string()).unwrap_or_default(),
    ]
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub method: String,
    pub rep: usize,
    pub seed: u64,
    pub benchmark_seed: u64,
    pub steps_completed: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    /// The resolved config as TOML; enough to reproduce every run.
    pub config: String,
    pub seed_derivation: String,
    pub runs: Vec<RunStatus>,
}

/// Seed of the benchmark instance used by repetition seed `seed`; shared by
/// every method so they face the same objective.
pub fn benchmark_seed(seed: u64) -> u64 {
    streams::derive_seed(seed, streams::BENCHMARK, 0)
}

/// Execute one (method, rep) run.
pub fn run_one(config: &ExperimentConfig, spec: &MethodSpec, rep: usize) -> RunTrace {
    let rc = config.run_config(spec, rep);
    match config.benchmark.build(benchmark_seed(rc.seed)) {
        Ok(bench) => engine::run(&rc, bench),
        Err(e) => RunTrace {
            label: spec.label(),
            seed: rc.seed,
            records: Vec::new(),
            failure: Some(format!("benchmark: {e}")),
        },
    }
}

/// Run every (method, rep) pair with up to `parallel` runs at once and write
/// `trace.csv` and `manifest.json` under `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path, parallel: usize) -> std::io::Result<Manifest> {
    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir)?;
    let jobs: Vec<(MethodSpec, usize)> =
        config.methods.iter().flat_map(|m| (0..config.repetitions).map(move |r| (*m, r))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    let statuses: Vec<std::io::Result<(RunStatus, PathBuf)>> = pool.install(|| {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|(spec, rep)| {
                let trace = run_one(config, spec, *rep);
                let path = runs_dir.join(format!("{}_rep{rep}.csv", spec.label()));
                let tmp = runs_dir.join(format!(".{}_rep{rep}.csv.tmp", spec.label()));
                {
                    let mut w = csv_writer(fs::File::create(&tmp)?);
                    for r in &trace.records {
                        w.write_record(trace_row(&trace.label, *rep, r))?;
                    }
                    w.flush()?;
                }
                fs::rename(&tmp, &path)?;
                let status = RunStatus {
                    method: trace.label.clone(),
                    rep: *rep,
                    seed: trace.seed,
                    benchmark_seed: benchmark_seed(trace.seed),
                    steps_completed: trace.records.len(),
                    status: if trace.failure.is_none() { "ok".into() } else { "failed".into() },
                    error: trace.failure,
                };
                Ok((status, path))
            })
            .collect()
    });

    let tmp = out.join(".trace.csv.tmp");
    let mut runs = Vec::with_capacity(statuses.len());
    {
        let mut file = std::io::BufWriter::new(fs::File::create(&tmp)?);
        csv_writer(&mut file).write_record(TRACE_HEADER)?;
        for s in statuses {
            let (status, path) = s?;
            file.write_all(&fs::read(&path)?)?;
            runs.push(status);
        }
        file.flush()?;
    }
    fs::rename(&tmp, out.join("trace.csv"))?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.to_toml(),
        seed_derivation: "run seed = base_seed + rep; component streams = ChaCha8 seeded by derive_seed(run seed, label, 0) \
                          for labels model-fit, design, gstar; benchmark instance seed = derive_seed(run seed, benchmark, 0)"
            .into(),
        runs,
    };
    let tmp = out.join(".manifest.json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n")?;
    fs::rename(&tmp, out.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
budget_steps = 3

[benchmark]
kind = "synthetic"

[[methods]]
method = "bosh"
b_or_k = 2
"#;

    #[test]
    fn minimal_config_echoes_defaults() {
        let r = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(r.config.repetitions, DEFAULT_REPETITIONS);
        for needle in ["repetitions = 20", "base_seed = 0", "model.restarts = 3", "benchmark.lower_variance = 0.5", "model.design"] {
            assert!(r.defaults.iter().any(|d| d.starts_with(needle)), "missing {needle} in {:?}", r.defaults);
        }
        // resolved config round-trips
        let again = ExperimentConfig::parse(&r.config.to_toml()).unwrap();
        assert_eq!(again.config, r.config);
    }

    #[test]
    fn errors_are_aggregated() {
        let text = r#"
repetitions = 0

[benchmark]
kind = "synthetic"
noise = -1.0

[[methods]]
method = "bosch"
b_or_k = 0
"#;
        let errs = ExperimentConfig::parse(text).unwrap_err();
        let all = errs.join("\n");
        assert!(all.contains("budget_steps: missing"), "{all}");
        assert!(all.contains("repetitions: must be ≥ 1"));
        assert!(all.contains("benchmark.noise"));
        assert!(all.contains("methods[0].method: unknown method `bosch`; allowed: bosh, fixed_ei"));
        assert!(all.contains("methods[0].b_or_k: must be ≥ 1"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let errs = ExperimentConfig::parse(&format!("budget = 4\n{MINIMAL}")).unwrap_err();
        assert!(errs.iter().any(|e| e.starts_with("budget: unknown")));
        let errs = ExperimentConfig::parse(&MINIMAL.replace("kind = \"synthetic\"", "kind = \"synthetic\"\nvariance = 1")).unwrap_err();
        assert!(errs.iter().any(|e| e.starts_with("benchmark:")), "{errs:?}");
    }

    #[test]
    fn trace_row_format() {
        let r = StepRecord {
            step: 2,
            cumulative_evals: 10,
            batch_size: 2,
            pool_size: 3,
            proposed: vec![(vec![0.1, 0.25], "0".into()), (vec![1.0 / 3.0, 0.5], "2".into())],
            observed_y: vec![-1.5, 2.0],
            incumbent_x: vec![0.5, 0.75],
            true_value: 0.3,
            suboptimality: None,
        };
        let row = trace_row("bosh_b2", 1, &r);
        assert_eq!(row[6], "0.1;0.25@0|0.3333333333333333;0.5@2");
        assert_eq!(row[7], "-1.5;2");
        assert_eq!(row[10], "");
        let back: f64 = "0.3333333333333333".parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn experiment_writes_complete_trace() {
        let text = r#"
budget_steps = 2
repetitions = 2

[benchmark]
kind = "synthetic"
grid_size = 200

[model]
restarts = 1
grid_per_dim = 100
direct_evals_per_dim = 30

[[methods]]
method = "bosh"
b_or_k = 2

[[methods]]
method = "fixed_ei"
b_or_k = 1
"#;
        let cfg = ExperimentConfig::parse(text).unwrap().config;
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment(&cfg, dir.path(), 1).unwrap();
        assert!(m.runs.iter().all(|r| r.status == "ok"));
        let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        let lines: Vec<&str> = trace.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER.join(","));
        assert_eq!(lines.len(), 1 + 2 * 2 * 2);
        assert!(!trace.contains('\r'));
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(ExperimentConfig::parse(&manifest.config).unwrap().config, cfg);
    }
}
