#![allow(dead_code)]

use hggs_core::ode_lab::{Dataset, LabelingConfig, SystemId, SystemSpec};
use hggs_core::surrogate::TrainConfig;

/// Training settings small enough for a pipeline to finish in well under a second.
pub fn tiny_train(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 5e-3,
        weight_decay: 1e-5,
        epochs_per_stage: 20,
        warm_epochs: 5,
        lr_decay_gamma: None,
        early_stop_patience: 200,
        early_stop_min_delta: 1e-5,
        hidden_layers: vec![8, 8],
        seed,
    }
}

/// A labeled Brusselator LHS design.
pub fn brusselator(n: usize, seed: u64) -> (SystemSpec, Dataset) {
    let spec = SystemId::Brusselator.spec();
    let lcfg = LabelingConfig::for_system(SystemId::Brusselator);
    let pts = hggs_core::ode_lab::lhs_generate(&spec, n, seed);
    let ds = lcfg.label(&spec, &pts, seed, None).unwrap();
    (spec, ds)
}

/// Brusselator-box points labeled by the Hopf condition instead of simulation.
pub fn hopf_labeled(n: usize, seed: u64) -> Dataset {
    let spec = SystemId::Brusselator.spec();
    let pts = hggs_core::ode_lab::lhs_generate(&spec, n, seed);
    let labels = pts
        .iter()
        .map(|p| {
            if p[1] > 1.0 + p[0] * p[0] {
                0.1 + 0.01 * p[0]
            } else {
                0.0
            }
        })
        .collect();
    Dataset::from_parts(SystemId::Brusselator, pts, labels).unwrap()
}

/// Sample standard deviation of a Bernoulli frequency over `trials`.
pub fn bernoulli_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}
