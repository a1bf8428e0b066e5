//! Experiment laboratory wiring data generation → training → detection,
//! with persisted, reproducible runs and an aggregating reporter.

pub mod report;
pub mod runner;
pub mod spec;

pub use report::{report, Summary};
pub use runner::{
    run_alias_sweep, run_lr_sweep, run_noise_matrix, run_size_sweep, run_sweep, CellRecord,
    LabError, SeedPlan,
};
pub use spec::{lab_detector_defaults, DataParams, ExperimentSpec, OptimizerGrid, Scenario};
