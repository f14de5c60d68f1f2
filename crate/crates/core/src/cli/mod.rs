//! Configuration, presets, CSV export and experiment runners used by the
//! `it2stc` binary.

pub mod config;
pub mod csv;
pub mod experiment;
pub mod presets;

pub use config::{ExperimentConfig, Overrides};
