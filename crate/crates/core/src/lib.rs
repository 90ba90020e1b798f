//! Radar ECCM simulation: structured interference-covariance estimation from
//! two training sets, jammer-count selection, adaptive matched filters, a
//! sparse-recovery detector/classifier and a Monte Carlo harness.

pub mod covariance;
pub mod detectors;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod rank_select;
pub mod scenario;
pub mod sparse;

pub use error::{Error, Result};
