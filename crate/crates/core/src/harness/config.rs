use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detectors::{check_scm_support, DetectorSpec};
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

/// A detection-probability experiment: one scenario, several detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub scenario: ScenarioConfig,
    pub detectors: Vec<DetectorSpec>,
    pub pfa: f64,
    pub n_calib_trials: usize,
    pub n_pd_trials: usize,
    pub sinr_grid_db: Vec<f64>,
    pub base_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::InvalidConfig(format!("pfa must lie in (0, 1), got {}", self.pfa)));
        }
        if self.n_calib_trials == 0 || self.n_pd_trials == 0 {
            return Err(Error::InvalidConfig("trial counts must be at least 1".into()));
        }
        if self.sinr_grid_db.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidConfig("SINR grid contains NaN".into()));
        }
        for d in &self.detectors {
            if let DetectorSpec::ScmAmf = d {
                check_scm_support(self.scenario.n(), self.scenario.k)?;
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str::<Self>(&text)
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
            .and_then(|cfg| cfg.validate().map(|_| cfg))
    }
}
