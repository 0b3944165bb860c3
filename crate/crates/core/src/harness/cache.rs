//! On-disk cache of labeled datasets.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use log::{info, warn};

use super::config::sha256_hex;
use crate::error::Result;
use crate::ode_lab::{lhs_generate, Dataset, LabelingConfig, SystemId};

/// Overrides the configured cache root.
pub const CACHE_ENV: &str = "HGGS_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".hggs-cache";

/// Cache root by precedence: flag, environment, config, default.
pub fn resolve_cache_root(flag: Option<&Path>, configured: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    configured.map_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR), Path::to_path_buf)
}

/// LHS datasets keyed by system, size, seed and labeling settings.
#[derive(Debug)]
pub struct DatasetCache {
    root: PathBuf,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl DatasetCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DatasetCache {
            root: root.into(),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn path_for(
        &self,
        system: SystemId,
        size: usize,
        seed: u64,
        lcfg: &LabelingConfig,
    ) -> Result<PathBuf> {
        let key = sha256_hex(serde_json::to_string(lcfg)?.as_bytes());
        Ok(self
            .root
            .join(system.name())
            .join(format!("n{size}-s{seed}-{}.csv", &key[..16])))
    }

    /// The labeled LHS design for the key, generated and stored on a miss.
    pub fn get_or_generate(
        &self,
        system: SystemId,
        size: usize,
        seed: u64,
        lcfg: &LabelingConfig,
        workers: Option<usize>,
    ) -> Result<Dataset> {
        let path = self.path_for(system, size, seed, lcfg)?;
        if path.exists() {
            match Dataset::load(&path) {
                Ok(ds)
                    if ds.len() == size
                        && ds.provenance.seed == seed
                        && ds.provenance.integration == Some(lcfg.integration)
                        && ds.provenance.frequency == Some(lcfg.frequency) =>
                {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    info!("cache hit: {}", path.display());
                    return Ok(ds);
                }
                Ok(_) => warn!(
                    "cache entry {} does not match its key; regenerating",
                    path.display()
                ),
                Err(e) => warn!(
                    "cache entry {} unreadable ({e}); regenerating",
                    path.display()
                ),
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        info!("cache miss: generating {size} {system} samples (seed {seed})");
        let ds = generate_dataset(system, size, seed, lcfg, workers)?;
        ds.save(&path)?;
        Ok(ds)
    }
}

/// LHS design of `size` points labeled by simulation.
pub fn generate_dataset(
    system: SystemId,
    size: usize,
    seed: u64,
    lcfg: &LabelingConfig,
    workers: Option<usize>,
) -> Result<Dataset> {
    let spec = system.spec();
    let pts = lhs_generate(&spec, size, seed);
    lcfg.label(&spec, &pts, seed, workers)
}
