//! Executes (method, seed) cells and writes their results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{error, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::DatasetCache;
use super::config::{ExperimentConfig, Method};
use crate::baselines::baseline_run;
use crate::error::{Error, Result};
use crate::hggs::{hggs_run, CycleRecord, SamplingOutcome};
use crate::io_util::write_atomic;
use crate::metrics::{evaluate, partition_test_set, SubsetReport, TestPartition, SUBSETS};
use crate::ode_lab::{Dataset, SystemId};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: Method,
    pub system: SystemId,
    pub seed: u64,
    pub report: SubsetReport,
    pub final_train_size: usize,
    pub labels_consumed: usize,
    /// `final_train_size / labels_consumed`.
    pub eta: f64,
    /// Relative to the result file.
    pub history_file: String,
    pub wall_ms: u64,
    /// SHA-256 of the canonical experiment config (`config.json` next to `results/`).
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub method: Method,
    pub seed: u64,
    pub error: String,
}

/// The fixed datasets of an experiment.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub initial: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub partition: TestPartition,
}

/// Dataset seeds per role; the test seed never coincides with the others.
pub fn dataset_seeds(dataset_seed: u64) -> [u64; 3] {
    ["initial", "validation", "test"].map(|role| derive_seed(dataset_seed, role, 0))
}

impl ExperimentData {
    pub fn load(
        cfg: &ExperimentConfig,
        cache: &DatasetCache,
        workers: Option<usize>,
    ) -> Result<Self> {
        let lcfg = cfg.labeling();
        let [s_init, s_val, s_test] = dataset_seeds(cfg.dataset_seed);
        let initial =
            cache.get_or_generate(cfg.system, cfg.initial_size, s_init, &lcfg, workers)?;
        let val = cache.get_or_generate(cfg.system, cfg.val_size, s_val, &lcfg, workers)?;
        let test = cache.get_or_generate(cfg.system, cfg.test_size, s_test, &lcfg, workers)?;
        info!(
            "dataset cache: {} hits, {} misses",
            cache.hits(),
            cache.misses()
        );
        let partition = partition_test_set(&test, cfg.test_k)?;
        Ok(ExperimentData {
            initial,
            val,
            test,
            partition,
        })
    }
}

/// Runs one sampler and scores it on the test set. Samplers only see the
/// initial and validation sets.
pub fn run_cell(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    method: Method,
    seed: u64,
    workers: Option<usize>,
) -> Result<(SubsetReport, SamplingOutcome)> {
    let spec = cfg.system.spec();
    let tcfg = cfg.train_for(seed);
    let lcfg = cfg.labeling();
    let outcome = match method.baseline() {
        None => {
            hggs_run(
                &spec,
                &data.initial,
                &data.val,
                &cfg.sampler_for(seed),
                &tcfg,
                &lcfg,
                workers,
            )?
            .0
        }
        Some(b) => baseline_run(
            &spec,
            &data.initial,
            &data.val,
            &cfg.baseline_for(b, seed),
            &tcfg,
            &lcfg,
            workers,
        )?,
    };
    let pred = outcome.model.predict(&data.test)?;
    let report = evaluate(
        &pred,
        &data.test,
        &data.partition,
        &outcome.train_set.labels(),
    )?;
    Ok((report, outcome))
}

pub fn cell_name(system: SystemId, method: Method, seed: u64) -> String {
    format!("{}_{}_s{seed}", system.name(), method.tag())
}

pub fn history_jsonl(history: &[CycleRecord]) -> Result<String> {
    let mut out = String::new();
    for rec in history {
        out.push_str(&serde_json::to_string(rec)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct SweepSummary {
    pub results: Vec<RunResult>,
    pub failures: Vec<CellFailure>,
    pub cache_hits: usize,
    pub cache_misses: usize,
}

/// Runs every (method, seed) cell, at most `workers` at a time.
///
/// Writes `config.json`, `results/<cell>.json`, `history/<cell>.jsonl` and
/// `aggregate.csv` under `out`, plus `failures.json` when a cell fails.
/// Failed cells are skipped, not fatal.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out: &Path,
    cache: &DatasetCache,
    workers: usize,
) -> Result<SweepSummary> {
    cfg.validate()?;
    let hash = cfg.hash()?;
    write_atomic(
        &out.join("config.json"),
        serde_json::to_string_pretty(cfg)?.as_bytes(),
    )?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let data = pool.install(|| ExperimentData::load(cfg, cache, None))?;

    let cells: Vec<(Method, u64)> = cfg
        .methods
        .iter()
        .flat_map(|&m| cfg.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let outcomes: Vec<std::result::Result<RunResult, CellFailure>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(method, seed)| {
                let name = cell_name(cfg.system, method, seed);
                let t = Instant::now();
                let fail = |e: Error| {
                    error!("cell {name} failed: {e}");
                    CellFailure {
                        method,
                        seed,
                        error: e.to_string(),
                    }
                };
                let (report, outcome) = run_cell(cfg, &data, method, seed, None).map_err(fail)?;
                let history_rel = format!("../history/{name}.jsonl");
                let result = RunResult {
                    method,
                    system: cfg.system,
                    seed,
                    report,
                    final_train_size: outcome.train_set.len(),
                    labels_consumed: outcome.labels_consumed,
                    eta: outcome.efficiency(),
                    history_file: history_rel,
                    wall_ms: t.elapsed().as_millis() as u64,
                    config_hash: hash.clone(),
                };
                let write = || -> Result<()> {
                    write_atomic(
                        &out.join("history").join(format!("{name}.jsonl")),
                        history_jsonl(&outcome.history)?.as_bytes(),
                    )?;
                    write_atomic(
                        &result_path(out, &name),
                        serde_json::to_string_pretty(&result)?.as_bytes(),
                    )
                };
                write().map_err(fail)?;
                info!(
                    "cell {name}: overall {:.4e}, minority {:?}, boundary {:.4e}, {} ms",
                    result.report.overall,
                    result.report.minority,
                    result.report.boundary,
                    result.wall_ms
                );
                Ok(result)
            })
            .collect()
    });

    let mut summary = SweepSummary {
        cache_hits: cache.hits(),
        cache_misses: cache.misses(),
        ..Default::default()
    };
    for o in outcomes {
        match o {
            Ok(r) => summary.results.push(r),
            Err(f) => summary.failures.push(f),
        }
    }
    write_atomic(
        &out.join("aggregate.csv"),
        aggregate_csv(&summary.results).as_bytes(),
    )?;
    if !summary.failures.is_empty() {
        write_atomic(
            &out.join("failures.json"),
            serde_json::to_string_pretty(&summary.failures)?.as_bytes(),
        )?;
    }
    Ok(summary)
}

pub fn result_path(out: &Path, name: &str) -> PathBuf {
    out.join("results").join(format!("{name}.json"))
}

/// Mean and sample standard deviation; `None` std for fewer than two values.
pub fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), std)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_default()
}

pub const AGGREGATE_HEADER: &str = "system,method,runs,overall_mean,overall_std,majority_mean,majority_std,minority_mean,minority_std,boundary_mean,boundary_std,ir_mean,ir_std,gi_mean,gi_std,eta";

/// One row per (system, method): test RMSE per subset and training-set
/// IR/GI as mean and sample std over seeds.
pub fn aggregate_csv(results: &[RunResult]) -> String {
    let mut keys: Vec<(SystemId, Method)> = results.iter().map(|r| (r.system, r.method)).collect();
    keys.sort();
    keys.dedup();
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for (system, method) in keys {
        let group: Vec<&RunResult> = results
            .iter()
            .filter(|r| r.system == system && r.method == method)
            .collect();
        let _ = write!(out, "{},{},{}", system.name(), method.tag(), group.len());
        for subset in SUBSETS {
            let vals: Vec<f64> = group
                .iter()
                .filter_map(|r| r.report.subset(subset))
                .collect();
            let (m, s) = mean_std(&vals);
            let _ = write!(out, ",{},{}", opt(m), opt(s));
        }
        for field in [|r: &RunResult| r.report.ir, |r: &RunResult| r.report.gi] {
            let vals: Vec<f64> = group.iter().filter_map(|r| field(r)).collect();
            let (m, s) = mean_std(&vals);
            let _ = write!(out, ",{},{}", opt(m), opt(s));
        }
        let _ = writeln!(out, ",{:.6}", group[0].eta);
    }
    out
}
