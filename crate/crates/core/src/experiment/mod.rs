//! Config-driven Monte Carlo experiments and their CSV output.

pub mod config;
pub mod output;
pub mod runner;
pub mod seed;

pub use config::{DetectorKind, ExperimentConfig, ThresholdMode};
pub use output::{emit_results, render_csv, ResultRow, CSV_HEADER};
pub use runner::{
    energy_detector_baseline, energy_statistic, export_first_trial_iq, run_experiment,
    threshold_empirical, Detector, ExperimentOutput,
};
pub use seed::{derive_seed, trial_stream_seed, SeedTag, TrialStream};
