use std::time::Instant;

use log::info;
use rand::seq::index::sample;

use super::config::{BaselineConfig, BaselineMethod};
use super::selection::{
    importance_resample, lowest, multiplicities, pool_select, proxy_scores, reservoir_select,
    StreamSelector,
};
use crate::error::{Error, Result};
use crate::hggs::gradient::normalized_coords;
use crate::hggs::run::{fresh_model, label_new_points, CycleRecord, SamplingOutcome};
use crate::ode_lab::{lhs_generate, Dataset, LabelingConfig, SystemSpec};
use crate::seeding::{derive_seed, rng_for};
use crate::surrogate::{
    residuals, train, train_with, EpochContext, MlpSurrogate, TrainConfig, TrainReport,
};

/// Training stage with the method's per-epoch weighting, if any.
fn train_stage(
    model: &mut MlpSurrogate,
    train_set: &Dataset,
    val: &Dataset,
    tcfg: &TrainConfig,
    epochs: usize,
    bcfg: &BaselineConfig,
    stage: u64,
    resamples: &mut usize,
) -> Result<TrainReport> {
    let n = train_set.len();
    let mut rng = rng_for(bcfg.seed, "importance", stage);
    let mut last = 0usize;
    let resample = |ctx: &EpochContext, rng: &mut crate::seeding::Rng| -> Option<Vec<f64>> {
        let pred = ctx.predictions?;
        let res: Vec<f64> = pred
            .iter()
            .zip(ctx.labels)
            .map(|(p, y)| (p - y).abs())
            .collect();
        // Residuals of a finite model are finite; training rejects the rest.
        let draws = importance_resample(&res, n, rng).ok()?;
        Some(multiplicities(&draws, n))
    };
    match bcfg.method {
        BaselineMethod::Is => train_with(model, train_set, val, tcfg, epochs, |ctx| {
            let w = resample(ctx, &mut rng);
            *resamples += usize::from(w.is_some());
            w
        }),
        BaselineMethod::IsDagger => train_with(model, train_set, val, tcfg, epochs, |ctx| {
            if ctx.epochs_since_improvement >= bcfg.dagger_patience
                && ctx.epoch - last >= bcfg.dagger_patience
            {
                last = ctx.epoch;
                let w = resample(ctx, &mut rng);
                *resamples += usize::from(w.is_some());
                w
            } else {
                None
            }
        }),
        _ => train(model, train_set, val, tcfg, epochs),
    }
}

/// Runs one comparison sampler.
///
/// Every method follows the same schedule: a fresh model trains on its
/// starting set for `warm_epochs` and then `epochs_per_stage`, and each of
/// `cycles` rounds ends with another `epochs_per_stage` (fresh optimizer,
/// parameters carried over). Methods without new samples simply repeat the
/// stages on their fixed data.
pub fn baseline_run(
    spec: &SystemSpec,
    initial: &Dataset,
    val: &Dataset,
    bcfg: &BaselineConfig,
    tcfg: &TrainConfig,
    lcfg: &LabelingConfig,
    workers: Option<usize>,
) -> Result<SamplingOutcome> {
    bcfg.validate()?;
    tcfg.validate()?;
    lcfg.validate()?;
    if initial.len() != bcfg.initial_size {
        return Err(Error::Config(format!(
            "initial_size = {} but the initial set has {} samples",
            bcfg.initial_size,
            initial.len()
        )));
    }
    if initial.system != spec.id || val.system != spec.id {
        return Err(Error::InvalidInput(
            "datasets belong to a different system".into(),
        ));
    }
    let tag = bcfg.method.tag();
    let t0 = Instant::now();

    let mut train_set = match bcfg.method {
        BaselineMethod::UsPool | BaselineMethod::UsStream => {
            let mut rng = rng_for(bcfg.seed, "us-start", 0);
            let mut idx = sample(&mut rng, initial.len(), bcfg.us_start_size()).into_vec();
            idx.sort_unstable();
            initial.subset(&idx, tag)
        }
        _ => initial.subset(&(0..initial.len()).collect::<Vec<_>>(), tag),
    };
    let mut labels_consumed = initial.len();
    let mut resamples = 0usize;

    let mut model = fresh_model(spec, tcfg, 0);
    let warm = train_stage(
        &mut model,
        &train_set,
        val,
        tcfg,
        tcfg.warm_epochs,
        bcfg,
        0,
        &mut resamples,
    )?;
    let first = train_stage(
        &mut model,
        &train_set,
        val,
        tcfg,
        tcfg.epochs_per_stage,
        bcfg,
        1,
        &mut resamples,
    )?;
    let mut rec = CycleRecord::measure(tag, 0, &model, &train_set, val)?;
    rec.epochs = warm.stopped_epoch + first.stopped_epoch;
    rec.resamples = resample_count(bcfg, &mut resamples);
    rec.wall_ms = t0.elapsed().as_millis() as u64;
    let mut history = vec![rec];

    for cycle in 1..=bcfg.cycles {
        let t = Instant::now();
        let c = cycle as u64;
        let mut fallbacks = Vec::new();
        let mut new_labels = 0;
        let mut failures = 0;
        match bcfg.method {
            BaselineMethod::UsPool | BaselineMethod::UsStream => {
                let coords = normalized_coords(&train_set);
                let labels = train_set.labels();
                let score = |cands: &[Vec<f64>]| -> Result<Vec<f64>> {
                    let pred = model.predict_rows(cands)?;
                    let norm: Vec<Vec<f64>> = cands.iter().map(|p| spec.normalize(p)).collect();
                    proxy_scores(&norm, &pred, &coords, &labels, bcfg.k)
                };
                let chosen: Vec<Vec<f64>> = if bcfg.method == BaselineMethod::UsPool {
                    let pool =
                        lhs_generate(spec, bcfg.candidates, derive_seed(bcfg.seed, "us-pool", c));
                    let norm: Vec<Vec<f64>> = pool.iter().map(|p| spec.normalize(p)).collect();
                    pool_select(&score(&pool)?, &norm, bcfg.o)
                        .into_iter()
                        .map(|i| pool[i].clone())
                        .collect()
                } else {
                    let mut sel = StreamSelector::new(bcfg.o, bcfg.candidates);
                    let mut stream: Vec<Vec<f64>> = Vec::new();
                    for chunk in 0..bcfg.max_chunks {
                        if sel.done() {
                            break;
                        }
                        let pts = lhs_generate(
                            spec,
                            bcfg.candidates,
                            derive_seed(
                                derive_seed(bcfg.seed, "us-stream", c),
                                "chunk",
                                chunk as u64,
                            ),
                        );
                        sel.push_chunk(&score(&pts)?);
                        stream.extend(pts);
                    }
                    let topped = sel.finish();
                    if topped > 0 {
                        fallbacks.push(format!("stream_exhausted:{topped}"));
                    }
                    sel.accepted().iter().map(|&i| stream[i].clone()).collect()
                };
                let new = label_new_points(
                    spec,
                    &chosen,
                    lcfg,
                    derive_seed(bcfg.seed, "us-label", c),
                    cycle,
                    bcfg.max_failure_fraction,
                    workers,
                )?;
                new_labels = new.len();
                failures = new.provenance.failure_count;
                train_set.extend(&new);
            }
            BaselineMethod::Wrs => {
                let pts = lhs_generate(
                    spec,
                    bcfg.candidates,
                    derive_seed(bcfg.seed, "wrs-chunk", c),
                );
                let chunk = label_new_points(
                    spec,
                    &pts,
                    lcfg,
                    derive_seed(bcfg.seed, "wrs-label", c),
                    cycle,
                    bcfg.max_failure_fraction,
                    workers,
                )?;
                new_labels = chunk.len();
                failures = chunk.provenance.failure_count;
                let w = residuals(&model, &chunk)?;
                let mut rng = rng_for(bcfg.seed, "wrs", c);
                let picks = reservoir_select(&w, bcfg.o, &mut rng)?;
                let out = lowest(&residuals(&model, &train_set)?, bcfg.o);
                for (&slot, &p) in out.iter().zip(&picks) {
                    train_set.samples[slot] = chunk.samples[p].clone();
                }
                train_set.provenance.failure_count += failures;
            }
            _ => {}
        }
        labels_consumed += new_labels;
        let report = train_stage(
            &mut model,
            &train_set,
            val,
            tcfg,
            tcfg.epochs_per_stage,
            bcfg,
            c + 1,
            &mut resamples,
        )?;
        let mut rec = CycleRecord::measure(tag, cycle, &model, &train_set, val)?;
        rec.fallbacks = fallbacks;
        rec.new_labels = new_labels;
        rec.labeling_failures = failures;
        rec.epochs = report.stopped_epoch;
        rec.resamples = resample_count(bcfg, &mut resamples);
        rec.wall_ms = t.elapsed().as_millis() as u64;
        info!(
            "{tag} cycle {cycle}: |S| = {}, val rmse {:?}",
            rec.train_size, rec.val_rmse
        );
        history.push(rec);
    }

    Ok(SamplingOutcome {
        model,
        train_set,
        history,
        labels_consumed,
    })
}

/// Resample events since the last record, for the resampling methods.
fn resample_count(bcfg: &BaselineConfig, counter: &mut usize) -> Option<usize> {
    let n = std::mem::take(counter);
    matches!(bcfg.method, BaselineMethod::Is | BaselineMethod::IsDagger).then_some(n)
}
