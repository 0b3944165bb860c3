use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaselineMethod {
    /// Train on the initial design only.
    #[serde(rename = "lhs-only")]
    LhsOnly,
    /// Residual-proportional resampling every epoch.
    #[serde(rename = "is")]
    Is,
    /// Residual-proportional resampling when validation stalls.
    #[serde(rename = "is-dagger")]
    IsDagger,
    /// Top-o of an unlabeled candidate pool.
    #[serde(rename = "us-p")]
    UsPool,
    /// Running-quantile acceptance over an unlabeled candidate stream.
    #[serde(rename = "us-s")]
    UsStream,
    /// Weighted reservoir replacement with labeled candidates.
    #[serde(rename = "wrs")]
    Wrs,
    /// Reserved; not implemented.
    #[serde(rename = "vessal")]
    Vessal,
    /// Reserved; not implemented.
    #[serde(rename = "smote")]
    Smote,
}

impl BaselineMethod {
    pub fn tag(self) -> &'static str {
        match self {
            BaselineMethod::LhsOnly => "lhs-only",
            BaselineMethod::Is => "is",
            BaselineMethod::IsDagger => "is-dagger",
            BaselineMethod::UsPool => "us-p",
            BaselineMethod::UsStream => "us-s",
            BaselineMethod::Wrs => "wrs",
            BaselineMethod::Vessal => "vessal",
            BaselineMethod::Smote => "smote",
        }
    }

    /// Requests ground-truth labels beyond the initial design.
    pub fn labels_new_samples(self) -> bool {
        matches!(
            self,
            BaselineMethod::UsPool | BaselineMethod::UsStream | BaselineMethod::Wrs
        )
    }
}

/// Settings for one comparison sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    /// Samples selected per cycle.
    pub o: usize,
    /// Candidates scored per cycle (US-P) or per stream chunk (US-S, WRS).
    pub candidates: usize,
    /// Stream chunks a US-S cycle may consume before taking the best seen.
    #[serde(default = "default_max_chunks")]
    pub max_chunks: usize,
    pub cycles: usize,
    /// Stagnant epochs before IS† resamples.
    #[serde(default = "default_dagger_patience")]
    pub dagger_patience: usize,
    /// Neighbours of the uncertainty proxy.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Labeled samples available at the start.
    pub initial_size: usize,
    /// Labels requested beyond the initial design.
    pub new_sample_budget: usize,
    #[serde(default = "default_failure_fraction")]
    pub max_failure_fraction: f64,
    pub seed: u64,
}

fn default_max_chunks() -> usize {
    20
}
fn default_dagger_patience() -> usize {
    50
}
fn default_k() -> usize {
    5
}
fn default_failure_fraction() -> f64 {
    0.2
}

impl BaselineConfig {
    /// Defaults matched to a sampler that ends with `n` samples after
    /// consuming `n + n/2` labels over `cycles` rounds.
    ///
    /// US-P/US-S keep a random `n - n/2` of the initial set and add `o = b`
    /// per cycle (`b = (n/2) / cycles`); pools hold `10 o` and stream chunks
    /// `5 o` candidates. WRS labels a chunk of `b` per cycle and swaps in
    /// `o = b/2` of them.
    pub fn for_method(method: BaselineMethod, n: usize, cycles: usize, seed: u64) -> Self {
        let b = (n / 2).checked_div(cycles).unwrap_or(0);
        let (o, candidates, budget) = match method {
            BaselineMethod::UsPool => (b, 10 * b, b * cycles),
            BaselineMethod::UsStream => (b, 5 * b, b * cycles),
            BaselineMethod::Wrs => (b / 2, b, b * cycles),
            _ => (0, 0, 0),
        };
        BaselineConfig {
            method,
            o,
            candidates,
            max_chunks: default_max_chunks(),
            cycles,
            dagger_patience: default_dagger_patience(),
            k: default_k(),
            initial_size: n,
            new_sample_budget: budget,
            max_failure_fraction: default_failure_fraction(),
            seed,
        }
    }

    /// Size of the training set the method ends with. US runs start from a
    /// reduced subset and grow back; the others hold their size.
    pub fn final_size(&self) -> usize {
        self.initial_size
    }

    /// Final training size over labels consumed.
    pub fn efficiency(&self) -> f64 {
        self.final_size() as f64 / (self.initial_size + self.new_sample_budget) as f64
    }

    /// Samples of the initial set a US run starts from.
    pub fn us_start_size(&self) -> usize {
        self.initial_size - self.o * self.cycles
    }

    pub fn validate(&self) -> Result<()> {
        let mut issues: Vec<String> = Vec::new();
        match self.method {
            BaselineMethod::Vessal | BaselineMethod::Smote => {
                issues.push(format!(
                    "method `{}` is reserved and not implemented",
                    self.method.tag()
                ));
            }
            BaselineMethod::LhsOnly | BaselineMethod::Is | BaselineMethod::IsDagger => {
                if self.new_sample_budget != 0 {
                    issues.push("methods without new samples need new_sample_budget = 0".into());
                }
            }
            BaselineMethod::UsPool | BaselineMethod::UsStream => {
                if self.new_sample_budget != self.o * self.cycles {
                    issues.push(format!(
                        "new_sample_budget = {} must equal o * cycles = {}",
                        self.new_sample_budget,
                        self.o * self.cycles
                    ));
                }
                if self.o * self.cycles > self.initial_size {
                    issues.push("o * cycles exceeds the initial size".into());
                }
                if self.candidates < self.o {
                    issues.push("candidates must be >= o".into());
                }
                if self.method == BaselineMethod::UsStream && self.max_chunks == 0 {
                    issues.push("max_chunks must be >= 1".into());
                }
            }
            BaselineMethod::Wrs => {
                if self.new_sample_budget != self.candidates * self.cycles {
                    issues.push(format!(
                        "new_sample_budget = {} must equal candidates * cycles = {}",
                        self.new_sample_budget,
                        self.candidates * self.cycles
                    ));
                }
                if self.o > self.candidates || self.o > self.initial_size {
                    issues.push("o must not exceed the chunk or the training set".into());
                }
            }
        }
        if self.k == 0 {
            issues.push("k must be >= 1".into());
        }
        if self.method == BaselineMethod::IsDagger && self.dagger_patience == 0 {
            issues.push("dagger_patience must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            issues.push("max_failure_fraction must lie in [0, 1]".into());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_thirds_efficiency_for_new_sample_methods() {
        for m in [
            BaselineMethod::UsPool,
            BaselineMethod::UsStream,
            BaselineMethod::Wrs,
        ] {
            let c = BaselineConfig::for_method(m, 10_000, 20, 0);
            c.validate().unwrap();
            assert_eq!(c.efficiency(), 10_000.0 / 15_000.0, "{m:?}");
        }
        for m in [
            BaselineMethod::LhsOnly,
            BaselineMethod::Is,
            BaselineMethod::IsDagger,
        ] {
            let c = BaselineConfig::for_method(m, 2000, 10, 0);
            c.validate().unwrap();
            assert_eq!(c.efficiency(), 1.0);
        }
    }

    #[test]
    fn reserved_methods_rejected() {
        assert!(BaselineConfig::for_method(BaselineMethod::Smote, 100, 2, 0)
            .validate()
            .is_err());
    }
}
