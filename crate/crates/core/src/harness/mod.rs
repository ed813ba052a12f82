//! Scenario configuration, Monte-Carlo orchestration, metrics and result
//! output.

mod config;
mod metrics;
mod runner;
mod sweep;

pub use config::{ScenarioConfig, Scheme};
pub use metrics::{
    MetricsRecord, Side, mean_and_halfwidth, normalized_mse, normalized_mse_bs, normalized_mse_ue,
    prefactor, spectral_efficiency, z_score,
};
pub use runner::{Purpose, RunLabel, run_scenario, run_scenario_for, stream_rng};
pub use sweep::{
    CSV_HEADER, OutputFormat, PRESETS, Series, SweepParam, SweepPlan, preset, run_sweep, write_csv,
    write_json, write_records,
};
