use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, LabeledSample};
use super::frequency::{oscillatory_frequency, FrequencyConfig};
use super::integrate::{integrate, IntegrationConfig};
use super::system::{SystemId, SystemSpec};
use crate::error::{Error, Result};

/// Integrator and detector settings that define a label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelingConfig {
    pub integration: IntegrationConfig,
    pub frequency: FrequencyConfig,
}

impl LabelingConfig {
    pub fn for_system(id: SystemId) -> Self {
        LabelingConfig {
            integration: IntegrationConfig::default(),
            frequency: FrequencyConfig::for_system(id),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.integration.validate()?;
        self.frequency.validate()
    }

    /// [`label_batch`] with these settings.
    pub fn label(
        &self,
        spec: &SystemSpec,
        coeffs: &[Vec<f64>],
        seed: u64,
        workers: Option<usize>,
    ) -> Result<Dataset> {
        label_batch(
            spec,
            coeffs,
            &self.integration,
            &self.frequency,
            seed,
            workers,
        )
    }
}

/// Ground-truth label of a single coefficient vector. `Err` means the
/// integration failed; callers decide how to record it.
pub fn label_one(
    spec: &SystemSpec,
    coeffs: &[f64],
    int_cfg: &IntegrationConfig,
    freq_cfg: &FrequencyConfig,
) -> Result<f64> {
    let traj = integrate(spec, coeffs, int_cfg)?;
    Ok(oscillatory_frequency(&traj, spec.observed, freq_cfg))
}

/// Simulates and labels every coefficient vector, preserving input order.
///
/// Failed integrations are labeled `0` and counted in
/// `provenance.failure_count`. With `workers = Some(n)` the batch runs on a
/// dedicated pool of `n` threads; the output never depends on `n`.
pub fn label_batch(
    spec: &SystemSpec,
    coeffs_list: &[Vec<f64>],
    int_cfg: &IntegrationConfig,
    freq_cfg: &FrequencyConfig,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Dataset> {
    int_cfg.validate()?;
    for c in coeffs_list {
        spec.check_coeffs(c)?;
        if !spec.contains(c) {
            return Err(Error::InvalidInput(format!(
                "coefficients {c:?} outside the box"
            )));
        }
    }
    let work = || -> Vec<(f64, bool)> {
        coeffs_list
            .par_iter()
            .map(|c| match label_one(spec, c, int_cfg, freq_cfg) {
                Ok(y) => (y, false),
                Err(e) => {
                    debug!("labeling {c:?} failed: {e}");
                    (0.0, true)
                }
            })
            .collect()
    };
    let results = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let failure_count = results.iter().filter(|(_, failed)| *failed).count();
    let samples = coeffs_list
        .iter()
        .zip(&results)
        .map(|(c, &(frequency, _))| LabeledSample {
            coeffs: c.clone(),
            frequency,
        })
        .collect();
    let mut ds = Dataset::new(spec.id, samples, "lhs", master_seed);
    ds.provenance.integration = Some(*int_cfg);
    ds.provenance.frequency = Some(*freq_cfg);
    ds.provenance.failure_count = failure_count;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_lab::lhs::lhs_generate;
    use crate::ode_lab::system::SystemId;

    #[test]
    fn empty_batch() {
        let spec = SystemId::Brusselator.spec();
        let ds = label_batch(
            &spec,
            &[],
            &Default::default(),
            &Default::default(),
            1,
            None,
        )
        .unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.provenance.failure_count, 0);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let spec = SystemId::Brusselator.spec();
        let pts = lhs_generate(&spec, 24, 4);
        let a = label_batch(
            &spec,
            &pts,
            &Default::default(),
            &Default::default(),
            4,
            Some(1),
        )
        .unwrap();
        let b = label_batch(
            &spec,
            &pts,
            &Default::default(),
            &Default::default(),
            4,
            Some(3),
        )
        .unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_eq!(a.provenance, b.provenance);
    }

    #[test]
    fn failures_are_zero_labeled_and_counted() {
        let spec = SystemId::Brusselator.spec();
        let cfg = IntegrationConfig {
            max_steps: 5,
            ..Default::default()
        };
        let pts = vec![vec![1.0, 3.0], vec![2.0, 2.0]];
        let ds = label_batch(&spec, &pts, &cfg, &Default::default(), 0, None).unwrap();
        assert_eq!(ds.provenance.failure_count, 2);
        assert!(ds.labels().iter().all(|&y| y == 0.0));
    }

    #[test]
    fn out_of_box_rejected() {
        let spec = SystemId::Brusselator.spec();
        let pts = vec![vec![6.0, 3.0]];
        assert!(label_batch(
            &spec,
            &pts,
            &Default::default(),
            &Default::default(),
            0,
            None
        )
        .is_err());
    }
}
