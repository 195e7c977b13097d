//! Standard and recursive algorithm drivers.

mod outcome;
mod recursive;
mod standard;

pub use outcome::{
    median_total_curve, optimal_iterations, optimal_iterations_with, speedup, total_queries, GroverOutcome, TOptRule,
};
pub use recursive::{
    closed_form_queries, default_schedule, layer_count, recurrence, recurrence_exact, round_even, run_recursive,
    ClosedForm, LayerLedger, QueryLedger, RecursiveConfig, RecursiveProgram, RecursiveRun,
};
pub use standard::{final_state, run_marked, run_real, run_standard, run_with_oracle, OracleMode, RunConfig, RunTrace};
