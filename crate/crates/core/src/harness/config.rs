use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{BaselineConfig, BaselineMethod};
use crate::error::{Error, Result};
use crate::hggs::SamplerConfig;
use crate::ode_lab::{LabelingConfig, SystemId};
use crate::surrogate::TrainConfig;

/// A sampler under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "hggs")]
    Hggs,
    #[serde(rename = "lhs-only")]
    LhsOnly,
    #[serde(rename = "is")]
    Is,
    #[serde(rename = "is-dagger")]
    IsDagger,
    #[serde(rename = "us-p")]
    UsPool,
    #[serde(rename = "us-s")]
    UsStream,
    #[serde(rename = "wrs")]
    Wrs,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Hggs,
        Method::LhsOnly,
        Method::Is,
        Method::IsDagger,
        Method::UsPool,
        Method::UsStream,
        Method::Wrs,
    ];

    pub fn baseline(self) -> Option<BaselineMethod> {
        Some(match self {
            Method::Hggs => return None,
            Method::LhsOnly => BaselineMethod::LhsOnly,
            Method::Is => BaselineMethod::Is,
            Method::IsDagger => BaselineMethod::IsDagger,
            Method::UsPool => BaselineMethod::UsPool,
            Method::UsStream => BaselineMethod::UsStream,
            Method::Wrs => BaselineMethod::Wrs,
        })
    }

    pub fn tag(self) -> &'static str {
        self.baseline().map_or("hggs", BaselineMethod::tag)
    }
}

/// One experiment: a system, its datasets, the methods and the seeds.
///
/// Datasets are fixed per system by `dataset_seed`; run seeds vary model
/// initialization and sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemId,
    pub initial_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    #[serde(default)]
    pub dataset_seed: u64,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Sampling cycles for every method.
    pub cycles: usize,
    /// Neighbours for the boundary subset of the test set.
    #[serde(default = "default_k")]
    pub test_k: usize,
    /// `None` uses the defaults for `initial_size` and `cycles`.
    #[serde(default)]
    pub sampler: Option<SamplerConfig>,
    /// `None` uses the per-system table.
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub labeling: Option<LabelingConfig>,
    /// Per-method replacements of the default baseline settings.
    #[serde(default)]
    pub baselines: BTreeMap<BaselineMethod, BaselineConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

fn default_k() -> usize {
    5
}

impl ExperimentConfig {
    /// Parses a JSON document, reporting the path of the first offending field.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Format {
                path: origin.to_path_buf(),
                message: format!("at `{}`: {}", e.path(), e.inner()),
            })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    /// Desk-scale Brusselator sweep over all methods and five seeds.
    pub fn desk(system: SystemId) -> Self {
        let mut train = TrainConfig::for_system(system);
        train.epochs_per_stage = 600;
        train.warm_epochs = 60;
        ExperimentConfig {
            system,
            initial_size: 2000,
            val_size: 1000,
            test_size: 5000,
            dataset_seed: 0,
            methods: Method::ALL.to_vec(),
            seeds: vec![1, 2, 3, 4, 5],
            cycles: 10,
            test_k: default_k(),
            sampler: None,
            train: Some(train),
            labeling: None,
            baselines: BTreeMap::new(),
            output_dir: None,
            cache_dir: None,
        }
    }

    pub fn sampler_for(&self, seed: u64) -> SamplerConfig {
        let mut s = self.sampler.clone().unwrap_or_else(|| {
            SamplerConfig::for_initial_size(self.initial_size, self.cycles, seed)
        });
        s.seed = seed;
        s
    }

    pub fn train_for(&self, seed: u64) -> TrainConfig {
        let mut t = self
            .train
            .clone()
            .unwrap_or_else(|| TrainConfig::for_system(self.system));
        t.seed = seed;
        t
    }

    pub fn labeling(&self) -> LabelingConfig {
        self.labeling
            .unwrap_or_else(|| LabelingConfig::for_system(self.system))
    }

    pub fn baseline_for(&self, method: BaselineMethod, seed: u64) -> BaselineConfig {
        let mut b = self.baselines.get(&method).cloned().unwrap_or_else(|| {
            BaselineConfig::for_method(method, self.initial_size, self.cycles, seed)
        });
        b.seed = seed;
        b
    }

    /// Collects every violated invariant.
    pub fn validate(&self) -> Result<()> {
        let mut issues: Vec<String> = Vec::new();
        if self.seeds.is_empty() {
            issues.push("seeds: must not be empty".into());
        }
        if self.methods.is_empty() {
            issues.push("methods: must not be empty".into());
        }
        for (name, v) in [
            ("initial_size", self.initial_size),
            ("val_size", self.val_size),
            ("test_size", self.test_size),
        ] {
            if v == 0 {
                issues.push(format!("{name}: must be positive"));
            }
        }
        if self.test_size <= self.test_k {
            issues.push(format!("test_size: must exceed test_k = {}", self.test_k));
        }
        let mut check = |field: &str, r: Result<()>| {
            if let Err(e) = r {
                issues.push(format!("{field}: {e}"));
            }
        };
        if self.methods.contains(&Method::Hggs) {
            let s = self.sampler_for(0);
            check("sampler", s.validate(Some(self.initial_size)));
            if s.m_c != self.cycles {
                check(
                    "sampler.m_c",
                    Err(Error::Config(format!(
                        "must equal cycles = {}",
                        self.cycles
                    ))),
                );
            }
        }
        check("train", self.train_for(0).validate());
        check("labeling", self.labeling().validate());
        for m in &self.methods {
            if let Some(b) = m.baseline() {
                let cfg = self.baseline_for(b, 0);
                check(&format!("baselines.{}", b.tag()), cfg.validate());
                if cfg.initial_size != self.initial_size {
                    check(
                        &format!("baselines.{}.initial_size", b.tag()),
                        Err(Error::Config(format!(
                            "must equal initial_size = {}",
                            self.initial_size
                        ))),
                    );
                }
            }
        }
        for b in self.baselines.keys() {
            if !self.methods.iter().any(|m| m.baseline() == Some(*b)) {
                issues.push(format!(
                    "baselines.{}: method not listed in methods",
                    b.tag()
                ));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues.join("\n  ")))
        }
    }

    /// Compact JSON used for hashing; field order is declaration order.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.canonical_json()?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
