//! Experiment harness for the forecasting models: config-driven runs,
//! comparison tables, deterministic plots, and synthetic demo data.

pub mod compare;
pub mod config;
pub mod plots;
pub mod runner;
pub mod synth;
