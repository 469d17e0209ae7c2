pub mod config;
pub mod experiment;
pub mod summary;

pub use config::{load_scenario, GeometryMode, SatNoiseMode, ScenarioConfig};
pub use experiment::{execute, run_experiment, Algorithm, Axis, ExperimentId, ExperimentSpec, ResultRow, RunOptions};
pub use summary::{summarize, SummaryRow};
