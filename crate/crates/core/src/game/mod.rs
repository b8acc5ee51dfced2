//! Scenario configuration, presets and the replicated simulation loop.

mod artifact;
mod config;
pub mod presets;
mod sim;
mod trajectory;

pub use artifact::{RunArtifact, RunMetadata, SeedEntry};
pub use config::{PolicyMode, ScenarioConfig, SCHEMA_VERSION};
pub use presets::{all_presets, mi_sweep, preset, MI_SWEEP_GRID, PRESET_NAMES};
pub use sim::{run_all, run_replica, simulate_replica, step, StepContext, UserAgent};
pub use trajectory::{
    trajectories_from_csv, trajectories_to_csv, Channel, Record, Trajectory, SCHEMA_LINE, TRAJECTORY_HEADER,
};
