//! Full-batch training with AdamW, exponential rate decay and early stopping.

use serde::{Deserialize, Serialize};

use super::adam::AdamW;
use super::mlp::MlpSurrogate;
use crate::error::{Error, Result};
use crate::ode_lab::{Dataset, SystemId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs_per_stage: usize,
    pub warm_epochs: usize,
    /// Per-epoch rate multiplier; `None` means `0.1^(1/epochs_per_stage)`.
    #[serde(default)]
    pub lr_decay_gamma: Option<f64>,
    pub early_stop_patience: usize,
    pub early_stop_min_delta: f64,
    pub hidden_layers: Vec<usize>,
    pub seed: u64,
}

impl TrainConfig {
    /// Default training settings for `id`.
    pub fn for_system(id: SystemId) -> Self {
        let (learning_rate, warm_epochs, epochs_per_stage, hidden_layers) = match id {
            SystemId::Brusselator => (2e-3, 300, 3000, vec![128, 256, 128]),
            SystemId::CellCycle => (2.5e-3, 200, 2000, vec![128, 256, 128]),
            SystemId::Mpf => (2e-3, 300, 3000, vec![128, 128, 128, 128]),
            SystemId::ActivatorInhibitor => (2e-3, 250, 2500, vec![256, 256, 256, 256]),
        };
        TrainConfig {
            learning_rate,
            weight_decay: 1e-5,
            epochs_per_stage,
            warm_epochs,
            lr_decay_gamma: None,
            early_stop_patience: 200,
            early_stop_min_delta: 1e-5,
            hidden_layers,
            seed: 0,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.lr_decay_gamma
            .unwrap_or_else(|| 0.1f64.powf(1.0 / self.epochs_per_stage.max(1) as f64))
    }

    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            issues.push("learning_rate must be > 0");
        }
        if !(self.weight_decay >= 0.0) {
            issues.push("weight_decay must be >= 0");
        }
        if self.epochs_per_stage == 0 {
            issues.push("epochs_per_stage must be >= 1");
        }
        if !(self.gamma() > 0.0 && self.gamma() <= 1.0) {
            issues.push("lr_decay_gamma must lie in (0, 1]");
        }
        if self.early_stop_patience == 0 {
            issues.push("early_stop_patience must be >= 1");
        }
        if !(self.early_stop_min_delta >= 0.0) {
            issues.push("early_stop_min_delta must be >= 0");
        }
        if self.hidden_layers.contains(&0) {
            issues.push("hidden layer widths must be >= 1");
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Unweighted RMSE of the predictions the epoch's gradient was taken at.
    pub train_rmse: f64,
    /// RMSE on the validation set after the epoch's update (NaN without one).
    pub val_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    /// 1-based epoch at which training ended.
    pub stopped_epoch: usize,
    /// 1-based epoch whose parameters were kept (0 when no epoch ran).
    pub best_epoch: usize,
    pub best_val_rmse: f64,
    pub early_stopped: bool,
}

/// What a per-epoch weighting hook sees before the epoch's gradient step.
pub struct EpochContext<'a> {
    /// 1-based epoch within this call.
    pub epoch: usize,
    /// Training-set predictions from the previous epoch (`None` on the first).
    pub predictions: Option<&'a [f64]>,
    pub labels: &'a [f64],
    pub epochs_since_improvement: usize,
}

fn rmse_of(pred: &[f64], y: &[f64]) -> f64 {
    let s: f64 = pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    (s / pred.len() as f64).sqrt()
}

/// Trains `model` in place for up to `epochs` epochs on the full batch.
pub fn train(
    model: &mut MlpSurrogate,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
    epochs: usize,
) -> Result<TrainReport> {
    train_with(model, train_set, val_set, cfg, epochs, |_| None)
}

/// [`train`] with a hook that may replace the per-sample loss weights before
/// any epoch. Weights persist until the hook returns new ones; the initial
/// weighting is uniform.
///
/// Early stopping tracks validation RMSE over the epochs of this call (the
/// starting parameters are not a candidate): any strict improvement records the
/// parameters, only an improvement larger than `early_stop_min_delta` resets
/// the patience counter, and the recorded parameters are restored at the end.
/// An empty validation set disables early stopping.
pub fn train_with<F>(
    model: &mut MlpSurrogate,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
    epochs: usize,
    mut hook: F,
) -> Result<TrainReport>
where
    F: FnMut(&EpochContext) -> Option<Vec<f64>>,
{
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let x = model.design_matrix(train_set)?;
    let y = train_set.labels();
    let xv = model.design_matrix(val_set)?;
    let yv = val_set.labels();
    let use_val = !val_set.is_empty();

    let mut opt = AdamW::new(model.num_params(), cfg.weight_decay);
    let gamma = cfg.gamma();
    let mut weights: Option<Vec<f64>> = None;
    let mut last_pred: Option<Vec<f64>> = None;

    // Candidates are the trained epochs only: a stage whose data shifts away
    // from the validation distribution must still be able to move.
    let mut best_val = f64::INFINITY;
    let mut best_params = model.params_flat();
    let mut best_epoch = 0;
    let mut anchor = best_val;
    let mut since = 0usize;
    let mut history = Vec::with_capacity(epochs);
    let mut early_stopped = false;
    let mut stopped_epoch = 0;

    for epoch in 1..=epochs {
        let ctx = EpochContext {
            epoch,
            predictions: last_pred.as_deref(),
            labels: &y,
            epochs_since_improvement: since,
        };
        if let Some(w) = hook(&ctx) {
            if w.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    expected: y.len(),
                    got: w.len(),
                });
            }
            if !(w.iter().all(|v| *v >= 0.0 && v.is_finite()) && w.iter().sum::<f64>() > 0.0) {
                return Err(Error::InvalidInput(
                    "loss weights must be >= 0 with a positive sum".into(),
                ));
            }
            weights = Some(w);
        }

        let eval = model.loss_and_gradients(x.view(), &y, weights.as_deref());
        if !eval.loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        let lr = cfg.learning_rate * gamma.powi(epoch as i32 - 1);
        opt.step_model(model, &eval.gradients, lr);
        let train_rmse = rmse_of(&eval.predictions, &y);
        last_pred = Some(eval.predictions);

        let val_rmse = if use_val {
            rmse_of(&model.forward_normalized(xv.view()), &yv)
        } else {
            f64::NAN
        };
        if use_val && !val_rmse.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_rmse,
            val_rmse,
        });
        stopped_epoch = epoch;

        if use_val {
            if val_rmse < best_val {
                best_val = val_rmse;
                best_epoch = epoch;
                best_params = model.params_flat();
            }
            if anchor - val_rmse > cfg.early_stop_min_delta {
                anchor = val_rmse;
                since = 0;
            } else {
                since += 1;
                if since >= cfg.early_stop_patience {
                    early_stopped = true;
                    break;
                }
            }
        }
    }

    if use_val {
        model.set_params_flat(&best_params)?;
    } else {
        best_epoch = stopped_epoch;
    }
    Ok(TrainReport {
        history,
        stopped_epoch,
        best_epoch,
        best_val_rmse: best_val,
        early_stopped,
    })
}
