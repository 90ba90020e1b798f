//! Ready-made experiment configurations for figures 4 to 9.
//!
//! Figures 4–7 are detection curves for the same three-jammer scene with
//! different training sizes; figures 8 and 9 are classification experiments
//! with two coherent jammers added.

use serde::{Deserialize, Serialize};

use super::{ClassificationConfig, ExperimentConfig, GridSpec};
use crate::detectors::{DetectorSpec, RankMethod};
use crate::error::{Error, Result};
use crate::scenario::{ArrayGeometry, Hypothesis, JammerSpec, ScenarioConfig};
use crate::sparse::SparseParams;

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Trial budget of a preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub pfa: f64,
    pub n_calib_trials: usize,
    pub n_pd_trials: usize,
    pub class_pfa: f64,
    pub n_class_calib_trials: usize,
    pub n_class_trials: usize,
}

impl Scale {
    /// Minutes on a single core.
    pub fn desk() -> Self {
        Scale {
            pfa: 1e-3,
            n_calib_trials: 100_000,
            n_pd_trials: 2_000,
            class_pfa: 1e-2,
            n_class_calib_trials: 10_000,
            n_class_trials: 500,
        }
    }

    /// False-alarm probability 1e-4 with 100/pfa calibration trials.
    pub fn full() -> Self {
        Scale {
            pfa: 1e-4,
            n_calib_trials: 1_000_000,
            n_pd_trials: 2_000,
            class_pfa: 1e-4,
            n_class_calib_trials: 1_000_000,
            n_class_trials: 1_000,
        }
    }
}

/// Three noise-like jammers, exponentially correlated clutter, 16 elements.
pub fn detection_scenario(k: usize, m: usize) -> ScenarioConfig {
    ScenarioConfig {
        geometry: ArrayGeometry::half_wavelength(16),
        noise_power: 1.0,
        clutter_one_lag: 0.9,
        cnr_db: 20.0,
        jammers: vec![
            JammerSpec::noise_like(15.0, 30.0),
            JammerSpec::noise_like(25.0, 30.0),
            JammerSpec::noise_like(-10.0, 30.0),
        ],
        target_aoa_deg: 0.0,
        k,
        m,
        coherent_random_phase: false,
    }
}

/// One noise-like jammer at 10° and coherent jammers at -14° and 16°.
pub fn classification_scenario(k: usize, m: usize) -> ScenarioConfig {
    ScenarioConfig {
        geometry: ArrayGeometry::half_wavelength(16),
        noise_power: 1.0,
        clutter_one_lag: 0.9,
        cnr_db: 20.0,
        jammers: vec![
            JammerSpec::noise_like(10.0, 30.0),
            JammerSpec::coherent(-14.0, 45.0),
            JammerSpec::coherent(16.0, 45.0),
        ],
        target_aoa_deg: 0.0,
        k,
        m,
        coherent_random_phase: false,
    }
}

/// Clairvoyant MF, sample-covariance AMF (only when `K >= N`) and the
/// improved AMF with known rank and each rank-selection rule.
pub fn detection_detectors(n: usize, k: usize, known_rank: usize) -> Vec<DetectorSpec> {
    let mut d = vec![DetectorSpec::Mf];
    if k >= n {
        d.push(DetectorSpec::ScmAmf);
    }
    d.extend([
        DetectorSpec::idt(RankMethod::Known { rank: known_rank }),
        DetectorSpec::idt(RankMethod::Aic),
        DetectorSpec::idt(RankMethod::Bic),
        DetectorSpec::idt(RankMethod::Gic { rho: 2.0 }),
        DetectorSpec::idt(RankMethod::Eig { threshold: 10.0 }),
    ]);
    d
}

pub fn sinr_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + i as f64 * step).collect()
}

pub fn detection_experiment(k: usize, m: usize, scale: &Scale, seed: u64) -> ExperimentConfig {
    let scenario = detection_scenario(k, m);
    ExperimentConfig {
        name: format!("pd K={k} M={m}"),
        detectors: detection_detectors(scenario.n(), k, 3),
        scenario,
        pfa: scale.pfa,
        n_calib_trials: scale.n_calib_trials,
        n_pd_trials: scale.n_pd_trials,
        sinr_grid_db: sinr_range(0.0, 30.0, 1.0),
        base_seed: seed,
    }
}

pub fn classification_experiment(
    k: usize,
    m: usize,
    hypotheses: Vec<Hypothesis>,
    sinr_grid_db: Vec<f64>,
    scale: &Scale,
    seed: u64,
) -> ClassificationConfig {
    ClassificationConfig {
        name: format!("classification K={k} M={m}"),
        scenario: classification_scenario(k, m),
        grid: GridSpec::default(),
        sparse: SparseParams::default(),
        pfa: scale.class_pfa,
        gate_pfa: 1e-2,
        n_calib_trials: scale.n_class_calib_trials,
        n_trials: scale.n_class_trials,
        sinr_grid_db,
        hypotheses,
        base_seed: seed,
    }
}

/// What a figure preset runs.
#[derive(Debug, Clone)]
pub enum Figure {
    Detection(ExperimentConfig),
    /// One or more classification runs, each with an output label.
    Classification(Vec<(String, ClassificationConfig)>),
}

/// Training sizes `(K, M)` of the detection figures.
pub fn detection_training(figure: u8) -> Option<(usize, usize)> {
    match figure {
        4 => Some((20, 20)),
        5 => Some((14, 20)),
        6 => Some((20, 13)),
        7 => Some((14, 13)),
        _ => None,
    }
}

pub fn figure(number: u8, scale: &Scale, seed: u64) -> Result<Figure> {
    if let Some((k, m)) = detection_training(number) {
        let mut cfg = detection_experiment(k, m, scale, seed);
        cfg.name = format!("figure {number}");
        return Ok(Figure::Detection(cfg));
    }
    match number {
        8 => Ok(Figure::Classification(
            [16, 32]
                .into_iter()
                .map(|km| {
                    let mut cfg = classification_experiment(
                        km,
                        km,
                        vec![Hypothesis::H3],
                        sinr_range(1.0, 29.0, 2.0),
                        scale,
                        seed,
                    );
                    cfg.name = format!("figure 8 K=M={km}");
                    (format!("k{km}_m{km}"), cfg)
                })
                .collect(),
        )),
        9 => {
            let mut cfg =
                classification_experiment(16, 16, Hypothesis::ALL.to_vec(), vec![20.0], scale, seed);
            cfg.name = "figure 9".into();
            Ok(Figure::Classification(vec![("k16_m16".into(), cfg)]))
        }
        other => Err(Error::InvalidConfig(format!(
            "no preset for figure {other}; choose 4 to 9"
        ))),
    }
}
