//! Configuration-driven experiment runner for the `slmc-core` samplers.
//!
//! A run is described by a TOML [`config::ExperimentConfig`], executed by
//! [`experiments::run_experiment`] and written to disk by
//! [`report::emit_outputs`]. [`presets`] holds one configuration per figure
//! panel.

pub mod config;
pub mod experiments;
pub mod plot;
pub mod presets;
pub mod report;
