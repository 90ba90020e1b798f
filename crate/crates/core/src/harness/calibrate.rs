use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, ExperimentConfig, Stream};
use crate::detectors::{DetectorSpec, FilterBank, MatchedFilter};
use crate::error::{Error, Result};
use crate::linalg::{c, CVector};
use crate::scenario::{build_covariances, synthesize, CovarianceModel, DataSet, Hypothesis, ScenarioConfig};

/// Shared per-experiment state: the clutter/noise scenario without coherent
/// jammers, its covariances and the clairvoyant filter.
pub(super) struct DetectionContext {
    pub scenario: ScenarioConfig,
    pub cov: CovarianceModel,
    pub v: CVector,
    clairvoyant: MatchedFilter,
}

impl DetectionContext {
    pub fn new(scenario: &ScenarioConfig) -> Result<Self> {
        let scenario = scenario.without_coherent();
        let cov = build_covariances(&scenario)?;
        let v = scenario.target_steering();
        let clairvoyant = MatchedFilter::new(&cov.m1, &v)?;
        Ok(DetectionContext {
            scenario,
            cov,
            v,
            clairvoyant,
        })
    }

    pub fn null_data(&self, seed: u64) -> Result<DataSet> {
        synthesize(&self.scenario, &self.cov, c(0.0), Hypothesis::H00, seed)
    }

    /// Filters (and selected ranks) of all detectors on one data set.
    pub fn filters(
        &self,
        data: &DataSet,
        detectors: &[DetectorSpec],
    ) -> Result<Vec<(MatchedFilter, Option<usize>)>> {
        let mut bank = FilterBank::new(&data.zt, &data.rt, &self.v);
        detectors
            .iter()
            .map(|d| match d {
                DetectorSpec::Mf => Ok((self.clairvoyant.clone(), None)),
                other => bank.filter(other, &self.cov.m1),
            })
            .collect()
    }
}

/// Statistics of every detector on one target-free trial.
#[derive(Debug, Clone, PartialEq)]
pub struct NullTrial {
    pub trial: u64,
    pub seed: u64,
    pub statistics: Vec<f64>,
    pub ranks: Vec<Option<usize>>,
}

/// Runs the calibration trials of `config` for all its detectors.
pub fn null_trials(config: &ExperimentConfig) -> Result<Vec<NullTrial>> {
    config.validate()?;
    let ctx = DetectionContext::new(&config.scenario)?;
    (0..config.n_calib_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(config.base_seed, Stream::Calibration, trial);
            let data = ctx.null_data(seed)?;
            let filters = ctx.filters(&data, &config.detectors)?;
            Ok(NullTrial {
                trial,
                seed,
                statistics: filters.iter().map(|(f, _)| f.statistic(&data.z)).collect(),
                ranks: filters.iter().map(|(_, r)| *r).collect(),
            })
        })
        .collect()
}

/// Empirical `(1 - pfa)` quantile: the threshold leaves `⌊n·pfa⌋` of the
/// `n` statistics strictly above it (barring ties).
pub fn empirical_threshold(statistics: &[f64], pfa: f64) -> Result<f64> {
    let n = statistics.len();
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::InvalidConfig(format!("pfa must lie in (0, 1), got {pfa}")));
    }
    let exceed = (n as f64 * pfa + 1e-9).floor() as usize;
    if exceed == 0 || exceed >= n {
        return Err(Error::TooFewTrials { trials: n, pfa });
    }
    if (n as f64) < 100.0 / pfa {
        log::warn!(
            "{n} calibration trials for pfa {pfa}; at least {:.0} are recommended",
            100.0 / pfa
        );
    }
    let mut sorted = statistics.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[n - exceed - 1])
}

/// Thresholds for every detector of `config`, in order.
pub fn calibrate_thresholds(config: &ExperimentConfig) -> Result<Vec<f64>> {
    let trials = null_trials(config)?;
    (0..config.detectors.len())
        .map(|d| {
            let stats: Vec<f64> = trials.iter().map(|t| t.statistics[d]).collect();
            empirical_threshold(&stats, config.pfa)
        })
        .collect()
}

/// Threshold for a single detector on the scenario of `config`.
pub fn calibrate_threshold(config: &ExperimentConfig, detector: &DetectorSpec) -> Result<f64> {
    let single = ExperimentConfig {
        detectors: vec![*detector],
        ..config.clone()
    };
    Ok(calibrate_thresholds(&single)?[0])
}

/// One row of the per-trial calibration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLogRow {
    pub trial: u64,
    pub seed: u64,
    pub statistic: f64,
    pub r_hat: Option<usize>,
    pub decision: bool,
}

pub fn trial_log(trials: &[NullTrial], detector: usize, threshold: f64) -> Vec<TrialLogRow> {
    trials
        .iter()
        .map(|t| TrialLogRow {
            trial: t.trial,
            seed: t.seed,
            statistic: t.statistics[detector],
            r_hat: t.ranks[detector],
            decision: t.statistics[detector] > threshold,
        })
        .collect()
}

/// Writes `trial,seed,statistic,r_hat,decision` rows; `r_hat` is empty for
/// detectors that do not select a rank.
pub fn write_trial_log(path: &Path, rows: &[TrialLogRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(super) fn csv_error(path: &Path, e: csv::Error) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Serialize(format!("{}: {e}", path.display()))
    }
}
