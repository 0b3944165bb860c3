//! Two-layer sampler: gradient-based filtering of the initial set, then
//! cycles of residual stratification and multigrid genetic sampling.

pub mod config;
pub mod filter;
pub mod gmm;
pub mod gradient;
pub mod mgs;
pub mod run;

pub use config::{split_cycle_budget, RemainderRule, SamplerConfig};
pub use filter::{gradient_filter, weighted_sample_without_replacement, FilterSelection};
pub use gmm::{gmm_stratify, ResidualStratification};
pub use gradient::{
    gradient_degree, gradient_degree_points, gradient_degree_query, normalized_coords, top_by_score,
};
pub use mgs::{grid_point, grid_sample_pair, mgs_generate, MgsFallbacks};
pub use run::{hggs_run, CycleRecord, SamplingOutcome};
