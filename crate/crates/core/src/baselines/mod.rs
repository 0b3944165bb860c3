//! Comparison samplers sharing the surrogate and the labeling pipeline:
//! plain LHS training, importance resampling (every epoch, or on stalls),
//! uncertainty sampling from a pool or a stream, and weighted reservoir
//! replacement.

pub mod config;
pub mod run;
pub mod selection;

pub use config::{BaselineConfig, BaselineMethod};
pub use run::baseline_run;
pub use selection::{
    importance_resample, multiplicities, pool_select, proxy_scores, reservoir_select,
    StreamSelector,
};
