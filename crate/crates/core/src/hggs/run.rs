//! The full sampling loop: warm-up, gradient filter, then stratify, sample,
//! label and retrain for each cycle.

use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::SamplerConfig;
use super::filter::{gradient_filter, FilterSelection};
use super::gmm::gmm_stratify;
use super::mgs::mgs_generate;
use crate::error::{Error, Result};
use crate::metrics::{gini_index, imbalance_ratio, rmse};
use crate::ode_lab::{Dataset, LabelingConfig, SystemSpec};
use crate::seeding::{derive_seed, rng_for};
use crate::surrogate::{train, MlpSurrogate, TrainConfig};

/// One line of a sampling run's JSON-lines history.
///
/// Cycle 0 describes the starting training set (after filtering, for this
/// sampler); cycles 1.. follow each round of new samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub method: String,
    pub cycle: usize,
    pub train_size: usize,
    /// Low/medium/high stratum sizes, when stratification ran.
    pub strata_sizes: Option<[usize; 3]>,
    pub fallbacks: Vec<String>,
    pub train_rmse: f64,
    pub val_rmse: Option<f64>,
    pub ir: Option<f64>,
    pub gi: Option<f64>,
    /// Ground-truth labels requested this cycle.
    pub new_labels: usize,
    pub labeling_failures: usize,
    pub epochs: usize,
    /// Resampling events during the cycle's training, for resampling methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resamples: Option<usize>,
    pub wall_ms: u64,
}

impl CycleRecord {
    /// Record for `train_set` under `model`, with everything cycle-specific empty.
    pub fn measure(
        method: &str,
        cycle: usize,
        model: &MlpSurrogate,
        train_set: &Dataset,
        val: &Dataset,
    ) -> Result<Self> {
        let labels = train_set.labels();
        let train_rmse = rmse(&model.predict(train_set)?, &labels)?;
        let val_rmse = if val.is_empty() {
            None
        } else {
            Some(rmse(&model.predict(val)?, &val.labels())?)
        };
        Ok(CycleRecord {
            method: method.to_string(),
            cycle,
            train_size: train_set.len(),
            strata_sizes: None,
            fallbacks: Vec::new(),
            train_rmse,
            val_rmse,
            ir: imbalance_ratio(&labels).ok(),
            gi: gini_index(&labels).ok(),
            new_labels: 0,
            labeling_failures: 0,
            epochs: 0,
            resamples: None,
            wall_ms: 0,
        })
    }
}

/// Result of a sampling run.
#[derive(Debug, Clone)]
pub struct SamplingOutcome {
    pub model: MlpSurrogate,
    pub train_set: Dataset,
    pub history: Vec<CycleRecord>,
    /// Ground-truth labels consumed, the initial set included.
    pub labels_consumed: usize,
}

impl SamplingOutcome {
    /// Final training-set size over labels consumed.
    pub fn efficiency(&self) -> f64 {
        self.train_set.len() as f64 / self.labels_consumed as f64
    }
}

/// Labels `points`, enforcing the per-batch failure ceiling.
pub(crate) fn label_new_points(
    spec: &SystemSpec,
    points: &[Vec<f64>],
    lcfg: &LabelingConfig,
    seed: u64,
    cycle: usize,
    max_failure_fraction: f64,
    workers: Option<usize>,
) -> Result<Dataset> {
    let new = lcfg.label(spec, points, seed, workers)?;
    let failures = new.provenance.failure_count;
    if failures as f64 > max_failure_fraction * points.len() as f64 {
        return Err(Error::LabelingFailures {
            cycle,
            failures,
            batch: points.len(),
        });
    }
    if failures > 0 {
        warn!(
            "cycle {cycle}: {failures} of {} new samples failed to integrate; labeled 0",
            points.len()
        );
    }
    Ok(new)
}

pub(crate) fn fresh_model(spec: &SystemSpec, tcfg: &TrainConfig, stage: u64) -> MlpSurrogate {
    let seed = if stage == 0 {
        tcfg.seed
    } else {
        derive_seed(tcfg.seed, "reinitialize", stage)
    };
    MlpSurrogate::new(spec.coeff_box.clone(), &tcfg.hidden_layers, seed)
}

/// Gradient-filtered genetic sampling.
///
/// 1. Warm-train a fresh model on `initial` for `warm_epochs`.
/// 2. Filter `initial` down to `n_f` samples with that model.
/// 3. Train on the coarse set for `epochs_per_stage`, continuing from the warm model.
/// 4. For each of `m_c` cycles: stratify training residuals, generate
///    `n_v1 + n_v2` points, label them, append, retrain for `epochs_per_stage`.
///
/// Every training stage starts a fresh optimizer; parameters carry over
/// unless `reinitialize` is set.
pub fn hggs_run(
    spec: &SystemSpec,
    initial: &Dataset,
    val: &Dataset,
    scfg: &SamplerConfig,
    tcfg: &TrainConfig,
    lcfg: &LabelingConfig,
    workers: Option<usize>,
) -> Result<(SamplingOutcome, FilterSelection)> {
    scfg.validate(Some(initial.len()))?;
    tcfg.validate()?;
    lcfg.validate()?;
    if initial.system != spec.id || val.system != spec.id {
        return Err(Error::InvalidInput(
            "datasets belong to a different system".into(),
        ));
    }

    let t0 = Instant::now();
    let mut model = fresh_model(spec, tcfg, 0);
    train(&mut model, initial, val, tcfg, tcfg.warm_epochs)?;
    let (mut train_set, selection) = gradient_filter(initial, &model, scfg)?;
    train_set.provenance.generator = "hggs".into();
    if scfg.reinitialize {
        model = fresh_model(spec, tcfg, 1);
    }
    let report = train(&mut model, &train_set, val, tcfg, tcfg.epochs_per_stage)?;
    let mut rec = CycleRecord::measure("hggs", 0, &model, &train_set, val)?;
    rec.epochs = tcfg.warm_epochs + report.stopped_epoch;
    rec.wall_ms = t0.elapsed().as_millis() as u64;
    info!(
        "hggs cycle 0: |S| = {}, val rmse {:?}",
        rec.train_size, rec.val_rmse
    );
    let mut history = vec![rec];
    let mut labels_consumed = initial.len();

    for cycle in 1..=scfg.m_c {
        let t = Instant::now();
        let res = crate::surrogate::residuals(&model, &train_set)?;
        let strat = gmm_stratify(&res)?;
        let mut rng = rng_for(scfg.seed, "mgs", cycle as u64);
        let (points, fb) = mgs_generate(
            &strat,
            &train_set.coeffs(),
            spec,
            scfg.n_v1,
            scfg.n_v2,
            &mut rng,
        );
        let new = label_new_points(
            spec,
            &points,
            lcfg,
            derive_seed(scfg.seed, "mgs-label", cycle as u64),
            cycle,
            scfg.max_failure_fraction,
            workers,
        )?;
        labels_consumed += new.len();
        train_set.extend(&new);
        if scfg.reinitialize {
            model = fresh_model(spec, tcfg, cycle as u64 + 1);
        }
        let report = train(&mut model, &train_set, val, tcfg, tcfg.epochs_per_stage)?;

        let mut rec = CycleRecord::measure("hggs", cycle, &model, &train_set, val)?;
        rec.strata_sizes = Some(strat.sizes());
        rec.fallbacks = fb.describe();
        if strat.fallback {
            rec.fallbacks.insert(0, "tercile_strata".into());
        }
        rec.new_labels = new.len();
        rec.labeling_failures = new.provenance.failure_count;
        rec.epochs = report.stopped_epoch;
        rec.wall_ms = t.elapsed().as_millis() as u64;
        info!(
            "hggs cycle {cycle}: |S| = {}, strata {:?}, val rmse {:?}",
            rec.train_size, rec.strata_sizes, rec.val_rmse
        );
        history.push(rec);
    }

    Ok((
        SamplingOutcome {
            model,
            train_set,
            history,
            labels_consumed,
        },
        selection,
    ))
}
