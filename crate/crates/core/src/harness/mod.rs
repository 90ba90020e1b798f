//! Monte Carlo engine: threshold calibration, detection-probability sweeps,
//! classification experiments, result files and figure presets.
//!
//! Every trial draws its data from a seed derived from `(base_seed, stream,
//! trial index)`, and per-trial results are collected in trial order, so the
//! outputs do not depend on the number of worker threads.

mod cache;
mod calibrate;
mod classification;
mod config;
mod emit;
mod pd;
pub mod presets;

pub use cache::ThresholdCache;
pub use calibrate::{
    calibrate_threshold, calibrate_thresholds, empirical_threshold, null_trials, trial_log,
    write_trial_log, NullTrial, TrialLogRow,
};
pub use classification::{
    calibrate_classifier, run_classification_experiment, run_classification_with,
    write_classification, ClassificationConfig, ClassificationPoint, ClassificationReport,
    ClassifierThresholds, ClassificationTrial, GridSpec,
};
pub use config::ExperimentConfig;
pub use emit::{emit_results, read_results, result_rows, ResultRow};
pub use pd::{pd_sweep, pd_sweep_many, CurvePoint};

/// Independent random streams drawn from one base seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Calibration = 1,
    Detection = 2,
    Phase = 3,
    ClassifierCalibration = 4,
    Classification = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` in `stream`.
pub fn derive_seed(base: u64, stream: Stream, index: u64) -> u64 {
    let s = splitmix64(base ^ (stream as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    splitmix64(s ^ splitmix64(index))
}
