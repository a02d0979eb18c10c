//! Trials, aggregation and result files.

pub mod aggregate;
pub mod config;
pub mod output;
pub mod runner;
pub mod seed;
pub mod slope;

pub use aggregate::{aggregate, AggregateCurve, DeltaStats};
pub use config::{AlphaPerStrategy, ExperimentConfig, Setting};
pub use output::{emit_results, read_curve_csv, EmittedFiles};
pub use runner::{
    generate_setting, run_trial, ArmId, Experiment, ExperimentResults, Instance, StepRecord,
    TrialOutcome, TrialRecord,
};
pub use seed::{derive_seed, trial_seed, TrialStreams};
pub use slope::{fit_regret_slope, fit_slope, log_log_slope};
