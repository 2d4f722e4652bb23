//! Configuration-driven experiment harness: algorithm x parameter sweeps
//! against the gradient-flow oracle, with CSV reports.

mod config;
mod report;
mod run;

pub use config::{
    param_name, AlgorithmConfig, BandwidthSpec, ExperimentConfig, ModelSource, OracleOverrides,
    StartSource,
};
pub use report::{match_modes, set_hausdorff, ExperimentReport, ModeMatch, ReportRow, REPORT_HEADER};
pub use run::{
    generate_starts, oracle_rows, run_experiment, write_oracle_csv, OracleRow, Workbench,
};
