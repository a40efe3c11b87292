//! Experiment runner for the wireless PBFT models: configuration loading,
//! parameter sweeps and CSV output.

pub mod config;
pub mod error;
pub mod output;
pub mod sweep;
pub mod validate;

pub use config::{load_spec, parse_spec, ExperimentSpec, OutputGroup, Setting, SimSettings, ThresholdUnit};
pub use error::CliError;
pub use output::{emit_csv, gnuplot_script};
pub use sweep::{run_sweep, SweepRow};
