//! Planted workloads, bench runs, invariant suites and the single-loss demo.

mod lowerbound;
mod planted;
mod run;
pub mod verify;

pub use lowerbound::{lowerbound_demo, single_loss_distortion, LowerBoundRow};
pub use planted::{gen_planted, gen_workload, PlantedInstance, Workload, WorkloadMeta};
pub use run::{
    bootstrap_summary, run_bench, run_bench_on, run_bench_with, workload_for, AssertionResult, Assertions,
    BenchOutcome, BenchReport, BuildSummary, Distortion, IndexKind, OutputPaths, QueryRow,
    RunConfig, Summary, REPORT_VERSION, RUN_CONFIG_VERSION,
};
pub use verify::{run_suite, verify, Check, SuiteResult, VerifyReport, REFERENCE_SEED, SUITES};

/// Process exit code for a passing run.
pub const EXIT_PASS: i32 = 0;
/// Process exit code when an assertion fails.
pub const EXIT_FAIL: i32 = 1;
/// Process exit code for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;
