//! Monte Carlo BER/MSE sweeps, CSV and SVG output, and the stability probe.

mod output;
mod sim;
mod stability;
mod sweep;

pub use output::{csv_string, emit_csv, emit_plot, parse_csv, parse_csv_str, CSV_HEADER};
pub use sim::{
    evaluate_arm, run_estimator, score_trial, sign_reference, simulate_trial, EstimatorKind, EstimatorSettings, Trial,
    TrialScore,
};
pub use stability::{stability_probe, stability_ratio, StabilityReport};
pub use sweep::{ci95, run_sweep, run_sweep_as, sigma2_from_db, SweepConfig, SweepResult, SweepRow};
