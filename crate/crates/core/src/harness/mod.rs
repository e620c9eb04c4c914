//! Experiments over time, their reports, the checks recomputed from reports, and
//! parameter sweeps.

mod experiment;
mod report;
mod sweep;
mod verify;

pub use experiment::{run_experiment, run_experiment_from, sample_times, trajectory_grid, Report};
pub use report::{csv_header, read_json, write_csv, write_json};
pub use sweep::{sweep, write_summary_csv, SweepCell, SweepSummary};
pub use verify::{
    asymptotic_check, drift_scale, evaluate_checks, evaluate_checks_with, max_complement, monotonicity_bound,
    sup_distance, orbital_scale, verify_bookkeeping, verify_conservation, verify_asymptotic,
    verify_drift, verify_monotonicity, verify_orbital, Check, AsymptoticCheck,
    MonotonicityCheck, Tolerances, REPORT_CRITERIA,
};
