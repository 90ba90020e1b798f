use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::DetectionContext;
use super::{derive_seed, ExperimentConfig, Stream};
use crate::detectors::DetectorSpec;
use crate::error::{Error, Result};
use crate::scenario::amplitude_for_sinr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sinr_db: f64,
    pub pd: f64,
    /// Binomial standard error `sqrt(pd (1 - pd) / n_trials)`.
    pub stderr: f64,
    pub n_trials: usize,
}

impl CurvePoint {
    pub fn from_counts(sinr_db: f64, hits: usize, n_trials: usize) -> Self {
        let pd = hits as f64 / n_trials as f64;
        CurvePoint {
            sinr_db,
            pd,
            stderr: (pd * (1.0 - pd) / n_trials as f64).sqrt(),
            n_trials,
        }
    }
}

pub fn pd_sweep(config: &ExperimentConfig, detector: &DetectorSpec, threshold: f64) -> Result<Vec<CurvePoint>> {
    let single = ExperimentConfig {
        detectors: vec![*detector],
        ..config.clone()
    };
    Ok(pd_sweep_many(&single, &[threshold])?.remove(0))
}

/// Detection probability of every detector of `config` at every SINR point.
///
/// Each trial draws one target-free data set and one target phase; the
/// target echo for each SINR point is added to the same cell under test, so
/// the covariance estimate of a trial is shared by all SINR points and the
/// curves are free of point-to-point training noise.
pub fn pd_sweep_many(config: &ExperimentConfig, thresholds: &[f64]) -> Result<Vec<Vec<CurvePoint>>> {
    config.validate()?;
    if thresholds.len() != config.detectors.len() {
        return Err(Error::Dimension(format!(
            "{} thresholds for {} detectors",
            thresholds.len(),
            config.detectors.len()
        )));
    }
    let ctx = DetectionContext::new(&config.scenario)?;
    let amplitudes = config
        .sinr_grid_db
        .iter()
        .map(|&s| amplitude_for_sinr(s, &ctx.cov, &ctx.v))
        .collect::<Result<Vec<f64>>>()?;
    let n_det = config.detectors.len();
    let n_sinr = amplitudes.len();

    let per_trial: Vec<Vec<bool>> = (0..config.n_pd_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let data = ctx.null_data(derive_seed(config.base_seed, Stream::Detection, trial))?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.base_seed, Stream::Phase, trial));
            let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
            let filters = ctx.filters(&data, &config.detectors)?;
            let mut hits = Vec::with_capacity(n_det * n_sinr);
            for ((filter, _), &threshold) in filters.iter().zip(thresholds) {
                let p0 = filter.projection(&data.z);
                let pv = filter.projection(&ctx.v);
                for &a in &amplitudes {
                    // (z0 + a e^{jφ} v)† M⁻¹ v
                    let p = p0 + (phase * a).conj() * pv;
                    hits.push(p.norm_sqr() / filter.gain() > threshold);
                }
            }
            Ok(hits)
        })
        .collect::<Result<_>>()?;

    let mut counts = vec![0usize; n_det * n_sinr];
    for hits in &per_trial {
        for (c, &h) in counts.iter_mut().zip(hits) {
            *c += h as usize;
        }
    }
    Ok((0..n_det)
        .map(|d| {
            config
                .sinr_grid_db
                .iter()
                .enumerate()
                .map(|(s, &sinr)| CurvePoint::from_counts(sinr, counts[d * n_sinr + s], config.n_pd_trials))
                .collect()
        })
        .collect())
}
