//! Scenario configuration, measurement noise, benchmark presets, metrics and
//! CSV output for the attitude tracking runs.

pub mod config;
pub mod noise;
pub mod run;

pub use config::{ScenarioConfig, ScenarioId};
pub use noise::{noise_table, sample_noise, square_wave, NoiseStreams};
pub use run::{
    build_system, compare_runs, initial_state, run_all_controllers, run_scenario, scenario_csv, tracking_family,
    Comparison, Metrics, ScenarioRun, CSV_HEADER,
};
