use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::calibrate::{empirical_threshold, null_trials};
use super::ExperimentConfig;
use crate::detectors::DetectorSpec;
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

/// Bumped whenever the calibration procedure changes meaning.
const CACHE_VERSION: u32 = 1;

#[derive(Serialize)]
struct CacheKey<'a> {
    version: u32,
    scenario: &'a ScenarioConfig,
    detector: &'a DetectorSpec,
    pfa: f64,
    n_calib_trials: usize,
    base_seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    detector: String,
    threshold: f64,
}

/// On-disk store of calibrated thresholds, one JSON file per
/// (scenario, detector, pfa, trial count, seed) tuple.
#[derive(Debug, Clone)]
pub struct ThresholdCache {
    dir: PathBuf,
}

impl ThresholdCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ThresholdCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex SHA-256 of the canonical JSON of the calibration inputs.
    pub fn key(config: &ExperimentConfig, detector: &DetectorSpec) -> String {
        let key = CacheKey {
            version: CACHE_VERSION,
            scenario: &config.scenario,
            detector,
            pfa: config.pfa,
            n_calib_trials: config.n_calib_trials,
            base_seed: config.base_seed,
        };
        let json = serde_json::to_vec(&key).expect("cache key serializes");
        hex::encode(Sha256::digest(&json))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let text = std::fs::read_to_string(self.path(key)).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        Some(entry.threshold)
    }

    pub fn put(&self, key: &str, detector: &DetectorSpec, threshold: f64) -> Result<()> {
        let entry = CacheEntry {
            detector: detector.id().to_string(),
            threshold,
        };
        let path = self.path(key);
        let text = serde_json::to_string(&entry).map_err(|e| Error::Serialize(e.to_string()))?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Thresholds for all detectors of `config`, calibrating only the ones
    /// not already stored.
    pub fn thresholds(&self, config: &ExperimentConfig) -> Result<Vec<f64>> {
        let keys: Vec<String> = config.detectors.iter().map(|d| Self::key(config, d)).collect();
        let mut found: Vec<Option<f64>> = keys.iter().map(|k| self.get(k)).collect();
        let missing: Vec<usize> = (0..keys.len()).filter(|&i| found[i].is_none()).collect();
        if !missing.is_empty() {
            let sub = ExperimentConfig {
                detectors: missing.iter().map(|&i| config.detectors[i]).collect(),
                ..config.clone()
            };
            let trials = null_trials(&sub)?;
            for (j, &i) in missing.iter().enumerate() {
                let stats: Vec<f64> = trials.iter().map(|t| t.statistics[j]).collect();
                let threshold = empirical_threshold(&stats, config.pfa)?;
                self.put(&keys[i], &config.detectors[i], threshold)?;
                found[i] = Some(threshold);
            }
        } else {
            log::info!("all thresholds found in {}", self.dir.display());
        }
        Ok(found.into_iter().map(|t| t.expect("filled above")).collect())
    }
}
