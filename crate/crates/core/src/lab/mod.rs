//! Configured experiments: build a problem, run the iteration, compare the
//! measured singular-value decay with the bounds and write a report.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, Mode};
pub use experiments::{
    run_commuting, run_d_sweep, run_eigen, run_experiment, run_linear, run_spectrum, run_two_step,
};
pub use report::{certify_dominance, DecayCurve, DecayReport, Dominance};
