//! Configuration, probe suites and reports for the command-line runner.

pub mod config;
pub mod e8;
pub mod report;
pub mod suites;

pub use config::{init_threads, parse_int_matrix, RunConfig, THREADS_VAR};
pub use e8::{e8_check, e8_exact_checks};
pub use report::{timed, CheckRecord, RunReport, ScenarioSummary, Status};
pub use suites::{
    invariants_check, kernel_sweep, Containment, GaussFibers, KernelSweep, Registry, Singular, Suite, SuiteContext,
};
