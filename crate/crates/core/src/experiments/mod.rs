//! Ensemble experiments: parameter sweeps and the scalar optimizations run
//! on top of them.

mod capture;
mod eval;
mod optimize;
mod real;
mod sweep;

pub use capture::{capture_histogram, CaptureRow};
pub use eval::{
    aggregate, auto_t_max, decay_for, evaluate_recursive, evaluate_standard, run_config, scan_final_layer, Evaluation,
    RecursiveEvaluation, RunSettings,
};
pub use optimize::{gamma_for_target_popt, optimize_gamma, optimize_schedule, GammaObjective, GammaSearch, GammaTarget, ScheduleSearch};
pub use real::{real_weight_sweep, RealSweepRecord};
pub use sweep::{
    run_point, run_sweep, Algorithm, GammaRule, GridPoint, SweepRecord, SweepSpec, DEFAULT_QUANTILES, RECORD_HEADER,
};
