//! Configuration, verification suites and the `run` / `converge` / `verify`
//! commands behind the command-line tool.

mod commands;
mod config;
mod report;
pub mod suites;

pub use commands::{converge, exit_code, run, run_scenario, verify, ScenarioRun};
pub use config::{
    GridSpec, OutputSpec, RotationConfig, ScenarioConfig, ScenarioSpec, VerifySpec, SCHEMA_VERSION,
    SUITES,
};
pub use report::{Check, ConvergenceRow, ConvergenceTable, RunSummary, VerificationReport};
