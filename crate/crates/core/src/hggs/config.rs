use serde::{Deserialize, Serialize};

use super::gradient::ceil_fraction;
use crate::error::{Error, Result};

/// How S_gf2 is drawn from the samples left after the gradient cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemainderRule {
    /// Without replacement, probability proportional to warm-model residual.
    #[default]
    ResidualWeighted,
    /// Highest warm-model residuals.
    TopResidual,
}

/// Budgets and knobs of the two sampling layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    /// Neighbours in the gradient degree.
    pub k: usize,
    /// Fraction of the initial set kept by gradient degree.
    pub r: f64,
    /// Size of the coarse set.
    pub n_f: usize,
    /// New samples over all cycles.
    pub n_s: usize,
    /// Sampling cycles.
    pub m_c: usize,
    /// Crossover samples per cycle.
    pub n_v1: usize,
    /// Mutation samples per cycle.
    pub n_v2: usize,
    #[serde(default)]
    pub remainder_rule: RemainderRule,
    /// Reinitialize the model before each cycle's training instead of warm-starting.
    #[serde(default)]
    pub reinitialize: bool,
    /// Abort a cycle when more than this fraction of its new samples fail to integrate.
    #[serde(default = "default_failure_fraction")]
    pub max_failure_fraction: f64,
    pub seed: u64,
}

fn default_failure_fraction() -> f64 {
    0.2
}

impl SamplerConfig {
    /// Defaults for an initial set of size `n`: K = 5, r = 0.2,
    /// n_f = n_s = n/2, and the per-cycle budget split 6:4.
    pub fn for_initial_size(n: usize, m_c: usize, seed: u64) -> Self {
        let half = n / 2;
        let (n_v1, n_v2) = split_cycle_budget(half, m_c);
        let n_s = m_c * (n_v1 + n_v2);
        SamplerConfig {
            k: 5,
            r: 0.2,
            n_f: half,
            n_s,
            m_c,
            n_v1,
            n_v2,
            remainder_rule: RemainderRule::default(),
            reinitialize: false,
            max_failure_fraction: default_failure_fraction(),
            seed,
        }
    }

    /// Checks internal consistency and, with `n`, the initial-set bounds.
    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        let mut issues = Vec::new();
        if self.k == 0 {
            issues.push("k must be >= 1".to_string());
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            issues.push("r must lie in (0, 1)".to_string());
        }
        if self.n_s != self.m_c * (self.n_v1 + self.n_v2) {
            issues.push(format!(
                "n_s = {} must equal m_c * (n_v1 + n_v2) = {}",
                self.n_s,
                self.m_c * (self.n_v1 + self.n_v2)
            ));
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            issues.push("max_failure_fraction must lie in [0, 1]".to_string());
        }
        if let Some(n) = n {
            let lo = ceil_fraction(self.r, n);
            if self.n_f < lo || self.n_f > n {
                issues.push(format!(
                    "n_f = {} must lie in [ceil(r*N), N] = [{lo}, {n}]",
                    self.n_f
                ));
            }
            if n <= self.k {
                issues.push(format!("initial size {n} must exceed k = {}", self.k));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues.join("; ")))
        }
    }

    /// Final size over labels consumed, for an initial set of size `n`.
    pub fn efficiency(&self, n: usize) -> f64 {
        (self.n_f + self.n_s) as f64 / (n + self.n_s) as f64
    }
}

/// Per-cycle crossover and mutation counts for a total of `n_s` over `m_c`
/// cycles: `b = n_s / m_c`, `n_v1 = round(0.6 b)`, `n_v2 = b - n_v1`.
pub fn split_cycle_budget(n_s: usize, m_c: usize) -> (usize, usize) {
    if m_c == 0 {
        return (0, 0);
    }
    let b = n_s / m_c;
    let n_v1 = (0.6 * b as f64).round() as usize;
    (n_v1, b - n_v1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_defaults() {
        let c = SamplerConfig::for_initial_size(10_000, 20, 0);
        assert_eq!((c.n_f, c.n_s, c.n_v1, c.n_v2), (5000, 5000, 150, 100));
        c.validate(Some(10_000)).unwrap();
        assert_eq!(c.efficiency(10_000), 10_000.0 / 15_000.0);
    }

    #[test]
    fn inconsistent_budget_rejected() {
        let mut c = SamplerConfig::for_initial_size(2000, 10, 0);
        c.n_s += 1;
        assert!(c.validate(None).is_err());
        let c = SamplerConfig {
            n_f: 100,
            ..SamplerConfig::for_initial_size(2000, 10, 0)
        };
        assert!(c.validate(Some(2000)).is_err());
    }
}
