//! Ground truth: the oscillatory systems, their integration, the frequency
//! detector and LHS dataset generation.

pub mod dataset;
pub mod frequency;
pub mod integrate;
pub mod label;
pub mod lhs;
pub mod system;

pub use dataset::{Dataset, LabeledSample, Provenance};
pub use frequency::{oscillatory_frequency, FrequencyConfig};
pub use integrate::{integrate, IntegrationConfig, Trajectory};
pub use label::{label_batch, label_one, LabelingConfig};
pub use lhs::lhs_generate;
pub use system::{Interval, SystemId, SystemSpec};
