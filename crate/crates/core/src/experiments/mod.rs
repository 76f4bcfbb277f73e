//! Seeded multi-trial sweeps, theorem-verification suites, and CSV output.

pub mod config;
pub mod csv;
pub mod sweep;
pub mod verify;

pub use config::{Convention, ExperimentConfig, SubsampleRule, Target, Variant};
pub use csv::{read_csv, render_csv, write_csv};
pub use sweep::{
    find_record, mean_std, run_sweep, run_trial, test_error, trial_seed, SweepRecord, TestMetric, TrialContext,
    TrialOutcome,
};
