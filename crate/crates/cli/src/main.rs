mod args;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bayes_bench::befs::befs_select;
use bayes_bench::chebyshev::WeightScheme;
use bayes_bench::data::{load_csv, write_csv};
use bayes_bench::datagen::generate;
use bayes_bench::estimator::estimate;
use bayes_bench::experiments::{
    bounds_comparison, clt_diagnostic, mse_sweep, write_rows_csv, SweepConfig,
};
use clap::Parser;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use args::{Cli, Command, DEFAULT_CLT_TRIALS, DEFAULT_SIZES, DEFAULT_TRIALS};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum Failure {
    Io(String),
    Invalid(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Invalid(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Io(m) | Failure::Invalid(m) => f.write_str(m),
        }
    }
}

impl From<bayes_bench::Error> for Failure {
    fn from(e: bayes_bench::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Flags override the config file, which overrides defaults.
fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: &Map<String, Value>) -> Result<T, Failure> {
    let mut merged = config.clone();
    if let Value::Object(set) = serde_json::to_value(flags).expect("flags serialize") {
        merged.extend(set.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Failure::Invalid(format!("config: {e}")))
}

fn read_config(path: Option<&Path>) -> Result<Map<String, Value>, Failure> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(Failure::Invalid(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(Failure::Invalid(format!("{}: {e}", path.display()))),
    }
}

/// Writes through a temporary file in the target directory so a failed run
/// never leaves a partial file behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_failure(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_failure(path, e))?;
    tmp.persist(path).map_err(|e| io_failure(path, e.error))?;
    Ok(())
}

fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn emit_json(path: Option<&PathBuf>, command: &str, config: Value, body: impl Serialize) -> Result<(), Failure> {
    let mut out = Map::new();
    out.insert("schema_version".into(), json!(SCHEMA_VERSION));
    out.insert("command".into(), json!(command));
    out.insert("config".into(), config);
    match serde_json::to_value(body).expect("report serializes") {
        Value::Object(m) => out.extend(m),
        v => {
            out.insert("result".into(), v);
        }
    }
    let mut bytes = serde_json::to_vec_pretty(&Value::Object(out)).expect("json serializes");
    bytes.push(b'\n');
    emit(path, &bytes)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = read_config(cli.config.as_deref())?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Invalid("invalid threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Invalid(format!("threads: {e}")))?;
    }
    match cli.command {
        Command::Estimate(a) => {
            let a = merge(&a, &config)?;
            let (input, label, label_col) = a.input.resolve()?;
            let ds = load_csv(&input, &label)?;
            let est = a.estimator.resolve(ds.n_classes())?;
            let report = estimate(&ds, &est)?;
            let cfg = json!({ "input": input, "label_col": label_col, "estimator": est });
            emit_json(a.output.as_ref(), "estimate", cfg, report)
        }
        Command::Weights(a) => {
            let a = merge(&a, &config)?;
            let l = a.l.ok_or_else(|| Failure::Invalid("missing --L".into()))?;
            let d = a.d.ok_or_else(|| Failure::Invalid("missing --d".into()))?;
            let alpha = a.alpha.unwrap_or(0.4);
            let scheme = a.scheme.unwrap_or_default();
            if l == 0 {
                return Err(Failure::Invalid("invalid L: must be at least 1".into()));
            }
            if scheme != WeightScheme::Uniform && l <= d {
                return Err(Failure::Invalid(format!("invalid L: must exceed d = {d}, got {l}")));
            }
            let (nodes, w) = scheme.build(l, d, alpha)?;
            let body = json!({
                "nodes": nodes.nodes(),
                "weights": w.as_slice(),
                "norm": w.norm(),
                "sum": w.sum(),
                "constraint_residuals": w.moment_residuals(&nodes),
            });
            let cfg = json!({ "L": l, "d": d, "alpha": alpha, "scheme": scheme });
            emit_json(a.output.as_ref(), "weights", cfg, body)
        }
        Command::Befs(a) => {
            let a = merge(&a, &config)?;
            let (input, label, label_col) = a.input.resolve()?;
            let r = a.r.ok_or_else(|| Failure::Invalid("missing --r".into()))?;
            let ds = load_csv(&input, &label)?;
            let est = a.estimator.resolve(ds.n_classes())?;
            let trace = befs_select(&ds, r, &est)?;
            let cfg = json!({
                "input": input, "label_col": label_col, "r": r, "estimator": est,
            });
            let mut body = serde_json::to_value(&trace).expect("trace serializes");
            body["label_map"] = json!(ds.label_map());
            emit_json(a.output.as_ref(), "befs", cfg, body)
        }
        Command::Simulate(a) => {
            let a = merge(&a, &config)?;
            let spec = a.family.resolve()?;
            let k = spec.n_classes();
            let n = match a.n.as_deref() {
                None => vec![1000; k],
                Some([n]) => vec![*n; k],
                Some(v) => v.to_vec(),
            };
            let ds = generate(&spec, &n)?;
            let mut bytes = Vec::new();
            write_csv(&ds, &mut bytes)?;
            emit(a.output.as_ref(), &bytes)
        }
        Command::Sweep(a) => {
            let a = merge(&a, &config)?;
            let spec = a.family.resolve()?;
            let mut cfg = SweepConfig::new(
                spec.clone(),
                a.sizes.clone().unwrap_or(DEFAULT_SIZES.to_vec()),
                a.trials.unwrap_or(DEFAULT_TRIALS),
            );
            cfg.estimator = a.estimator.resolve(spec.n_classes())?;
            cfg.schemes = a.schemes.clone().unwrap_or(vec![cfg.estimator.plan.scheme]);
            cfg.alphas = a.alphas.clone().unwrap_or(vec![cfg.estimator.plan.alpha]);
            cfg.seed = spec.seed;
            cfg.n_mc = args::n_mc(a.n_mc);
            let result = mse_sweep(&cfg)?;
            let mut bytes = Vec::new();
            write_rows_csv(&result.rows, &mut bytes)?;
            if let Some(p) = &a.summary {
                let body = json!({ "oracle": result.oracle, "cells": result.cells });
                emit_json(Some(p), "sweep", json!(cfg), body)?;
            }
            emit(a.output.as_ref(), &bytes)
        }
        Command::Bounds(a) => {
            let a = merge(&a, &config)?;
            let spec = a.family.resolve()?;
            let mut cfg = SweepConfig::new(
                spec.clone(),
                a.sizes.clone().unwrap_or(DEFAULT_SIZES.to_vec()),
                a.trials.unwrap_or(DEFAULT_TRIALS),
            );
            cfg.estimator = a.estimator.resolve(spec.n_classes())?;
            cfg.seed = spec.seed;
            cfg.n_mc = args::n_mc(a.n_mc);
            let table = bounds_comparison(&cfg)?;
            emit_json(a.output.as_ref(), "bounds", json!(cfg), table)
        }
        Command::Clt(a) => {
            let a = merge(&a, &config)?;
            let spec = a.family.resolve()?;
            let n = a.n.unwrap_or(500);
            let trials = a.trials.unwrap_or(DEFAULT_CLT_TRIALS);
            let est = a.estimator.resolve(spec.n_classes())?;
            let r = clt_diagnostic(&spec, n, trials, &est, spec.seed)?;
            let cfg = json!({ "spec": spec, "n": n, "trials": trials, "estimator": est });
            emit_json(a.output.as_ref(), "clt", cfg, r)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
