//! Scenario files, experiment commands and artifact export.

pub mod artifacts;
pub mod commands;
pub mod scenario;

pub use scenario::{load_scenario, LoadedScenario, ScenarioFile};
