use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::{csv_error, empirical_threshold};
use super::{derive_seed, Stream};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::scenario::{
    amplitude_for_sinr, build_covariances, synthesize, CovarianceModel, Hypothesis, ScenarioConfig,
};
use crate::sparse::{
    classify, occupancy, scenario_metrics, AngleGrid, ScenarioMetrics, SparseParams, SparseProblem,
    SparseSolution, TrialRecord,
};

/// Uniform angle grid with contiguous subsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
    pub subset_size: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            start_deg: -22.0,
            stop_deg: 22.0,
            step_deg: 1.0,
            subset_size: 5,
        }
    }
}

impl GridSpec {
    pub fn build(&self, target_deg: f64) -> Result<AngleGrid> {
        AngleGrid::uniform(
            self.start_deg,
            self.stop_deg,
            self.step_deg,
            self.subset_size,
            target_deg,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationConfig {
    #[serde(default)]
    pub name: String,
    /// Scenario including the coherent jammers present under `H2`/`H3`.
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sparse: SparseParams,
    /// False-alarm probability of the likelihood-ratio test.
    pub pfa: f64,
    /// Probability that a target-free scene leaves a peak above the gate in
    /// the target subset.
    pub gate_pfa: f64,
    pub n_calib_trials: usize,
    pub n_trials: usize,
    pub sinr_grid_db: Vec<f64>,
    pub hypotheses: Vec<Hypothesis>,
    pub base_seed: u64,
}

impl ClassificationConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.sparse.validate()?;
        self.grid.build(self.scenario.target_aoa_deg)?;
        for (name, p) in [("pfa", self.pfa), ("gate_pfa", self.gate_pfa)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1), got {p}")));
            }
        }
        if self.n_calib_trials == 0 || self.n_trials == 0 {
            return Err(Error::InvalidConfig("trial counts must be at least 1".into()));
        }
        if self.hypotheses.is_empty() {
            return Err(Error::InvalidConfig("no hypotheses to simulate".into()));
        }
        if self.hypotheses.iter().any(|h| h.has_coherent()) && !self.scenario.has_coherent() {
            return Err(Error::InvalidConfig(
                "H2/H3 trials need coherent jammers in the scenario".into(),
            ));
        }
        if self.sinr_grid_db.is_empty() || self.sinr_grid_db.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidConfig("SINR grid must be non-empty and free of NaN".into()));
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

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierThresholds {
    /// Threshold of the likelihood-ratio test.
    pub lrt: f64,
    /// Amplitude gate applied to the recovered peaks.
    pub peak: f64,
    pub n_trials: usize,
}

struct Context {
    grid: AngleGrid,
    grid_matrix: CMatrix,
    full: ScenarioConfig,
    null: ScenarioConfig,
    cov: CovarianceModel,
    gamma_target: Vec<u8>,
    jammer_subsets: Vec<usize>,
}

impl Context {
    fn new(config: &ClassificationConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid.build(config.scenario.target_aoa_deg)?;
        let grid_matrix = grid.steering_matrix(&config.scenario.geometry);
        let null = config.scenario.without_coherent();
        // Coherent jammers only enter the cell under test, so both scenarios
        // share one covariance model.
        let cov = build_covariances(&null)?;
        let angles = grid.angles_deg();
        let (lo, hi) = (angles[0], angles[angles.len() - 1]);
        let target_index = grid.nearest_index(config.scenario.target_aoa_deg);
        let mut jammer_subsets: Vec<usize> = config
            .scenario
            .coherent_jammers()
            .filter(|j| j.aoa_deg >= lo && j.aoa_deg <= hi)
            .filter_map(|j| grid.subset_of_angle(j.aoa_deg))
            .collect();
        jammer_subsets.sort_unstable();
        jammer_subsets.dedup();
        Ok(Context {
            gamma_target: occupancy(&grid, target_index),
            grid,
            grid_matrix,
            full: config.scenario.clone(),
            null,
            cov,
            jammer_subsets,
        })
    }

    fn truth(&self, hypothesis: Hypothesis) -> (Vec<u8>, Vec<usize>) {
        let mut gamma = vec![0u8; self.grid.n_subsets()];
        if hypothesis.has_target() {
            gamma.clone_from(&self.gamma_target);
        }
        let jammers = if hypothesis.has_coherent() {
            self.jammer_subsets.clone()
        } else {
            Vec::new()
        };
        for &s in &jammers {
            gamma[s] = 1;
        }
        (gamma, jammers)
    }

    fn scenario_for(&self, hypothesis: Hypothesis) -> &ScenarioConfig {
        if hypothesis.has_coherent() {
            &self.full
        } else {
            &self.null
        }
    }
}

/// Calibrates the test threshold at `pfa` and then the peak gate at
/// `gate_pfa`, both on the same target-free trials. The gate is the
/// `(1 - gate_pfa)` quantile of the largest recovered magnitude inside the
/// target subset.
pub fn calibrate_classifier(config: &ClassificationConfig) -> Result<ClassifierThresholds> {
    let ctx = Context::new(config)?;
    let stats: Vec<(f64, f64)> = (0..config.n_calib_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(config.base_seed, Stream::ClassifierCalibration, trial);
            let data = synthesize(&ctx.null, &ctx.cov, c(0.0), Hypothesis::H00, seed)?;
            let problem = SparseProblem::from_training(&data.zt, &data.rt, &ctx.grid_matrix, &config.sparse)?;
            let sol = problem.solve(&data.z, &config.sparse)?;
            Ok((sol.lrt, sol.target_peak(&ctx.grid)))
        })
        .collect::<Result<_>>()?;
    let lrts: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let peaks: Vec<f64> = stats.iter().map(|s| s.1).collect();
    Ok(ClassifierThresholds {
        lrt: empirical_threshold(&lrts, config.pfa)?,
        peak: empirical_threshold(&peaks, config.gate_pfa)?,
        n_trials: config.n_calib_trials,
    })
}

/// One classification trial, as written to the JSON-lines log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTrial {
    pub trial: u64,
    pub seed: u64,
    pub sinr_db: f64,
    pub truth: Hypothesis,
    pub decided: Hypothesis,
    pub lrt: f64,
    pub lrt_pass: bool,
    pub q_hat: f64,
    pub r_hat: usize,
    pub support: Vec<usize>,
    pub support_deg: Vec<f64>,
    pub gamma_bar: Vec<u8>,
    pub anomaly: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationPoint {
    pub sinr_db: f64,
    pub truth: Hypothesis,
    pub metrics: ScenarioMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub thresholds: ClassifierThresholds,
    /// One point per (hypothesis, SINR), hypothesis-major.
    pub points: Vec<ClassificationPoint>,
    /// Per-trial log in the same order as `points`, trial-minor.
    pub trials: Vec<ClassificationTrial>,
}

impl ClassificationReport {
    pub fn point(&self, truth: Hypothesis, sinr_db: f64) -> Option<&ClassificationPoint> {
        self.points
            .iter()
            .find(|p| p.truth == truth && (p.sinr_db - sinr_db).abs() < 1e-9)
    }
}

pub fn run_classification_experiment(config: &ClassificationConfig) -> Result<ClassificationReport> {
    let thresholds = calibrate_classifier(config)?;
    run_classification_with(config, thresholds)
}

/// Runs the trials with given thresholds.
///
/// Every trial draws one training pair and one noise realisation of the cell
/// under test; all hypotheses and SINR points of that trial reuse them, so
/// the covariance estimate is computed once per trial. Results for
/// hypotheses without a target do not depend on SINR and are computed once.
pub fn run_classification_with(
    config: &ClassificationConfig,
    thresholds: ClassifierThresholds,
) -> Result<ClassificationReport> {
    let ctx = Context::new(config)?;
    let v = ctx.null.target_steering();
    let amplitudes = config
        .sinr_grid_db
        .iter()
        .map(|&s| amplitude_for_sinr(s, &ctx.cov, &v))
        .collect::<Result<Vec<f64>>>()?;
    let n_sinr = amplitudes.len();
    let params = &config.sparse;

    let per_trial: Vec<Vec<(TrialRecord, ClassificationTrial)>> = (0..config.n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_seed(config.base_seed, Stream::Classification, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.base_seed, Stream::Phase, trial));
            let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
            let base = synthesize(&ctx.null, &ctx.cov, c(0.0), Hypothesis::H00, seed)?;
            let problem = SparseProblem::from_training(&base.zt, &base.rt, &ctx.grid_matrix, params)?;

            let mut out = Vec::with_capacity(config.hypotheses.len() * n_sinr);
            for &hyp in &config.hypotheses {
                let (gamma_true, jammer_subsets) = ctx.truth(hyp);
                let score = |sol: &SparseSolution, sinr_db: f64| {
                    let lrt_pass = sol.lrt > thresholds.lrt;
                    let outcome = classify(&sol.estimate, &ctx.grid, lrt_pass, thresholds.peak);
                    let record = TrialRecord {
                        truth: hyp,
                        decided: outcome.decided,
                        lrt_pass,
                        gamma_bar: outcome.gamma_bar.clone(),
                        gamma_true: gamma_true.clone(),
                        jammer_subsets: jammer_subsets.clone(),
                    };
                    let log = ClassificationTrial {
                        trial,
                        seed,
                        sinr_db,
                        truth: hyp,
                        decided: outcome.decided,
                        lrt: sol.lrt,
                        lrt_pass,
                        q_hat: sol.estimate.q_hat,
                        r_hat: problem.r_hat(),
                        support: sol.estimate.support.clone(),
                        support_deg: sol
                            .estimate
                            .support
                            .iter()
                            .map(|&i| ctx.grid.angles_deg()[i])
                            .collect(),
                        gamma_bar: outcome.gamma_bar,
                        anomaly: outcome.anomaly,
                        iterations: sol.estimate.iterations,
                    };
                    (record, log)
                };
                if hyp.has_target() {
                    for (&sinr_db, &a) in config.sinr_grid_db.iter().zip(&amplitudes) {
                        let data = synthesize(ctx.scenario_for(hyp), &ctx.cov, phase * a, hyp, seed)?;
                        let sol = problem.solve(&data.z, params)?;
                        out.push(score(&sol, sinr_db));
                    }
                } else {
                    let data = synthesize(ctx.scenario_for(hyp), &ctx.cov, c(0.0), hyp, seed)?;
                    let sol = problem.solve(&data.z, params)?;
                    for &sinr_db in &config.sinr_grid_db {
                        out.push(score(&sol, sinr_db));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let n_points = config.hypotheses.len() * n_sinr;
    let mut points = Vec::with_capacity(n_points);
    let mut trials = Vec::with_capacity(n_points * config.n_trials);
    for p in 0..n_points {
        let records: Vec<TrialRecord> = per_trial.iter().map(|t| t[p].0.clone()).collect();
        trials.extend(per_trial.iter().map(|t| t[p].1.clone()));
        points.push(ClassificationPoint {
            sinr_db: config.sinr_grid_db[p % n_sinr],
            truth: config.hypotheses[p / n_sinr],
            metrics: scenario_metrics(&records, ctx.grid.n_subsets()),
        });
    }
    Ok(ClassificationReport {
        thresholds,
        points,
        trials,
    })
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a ClassificationConfig,
    thresholds: &'a ClassifierThresholds,
}

#[derive(Serialize)]
struct AggregateRow {
    sinr_db: f64,
    truth: Hypothesis,
    n_trials: usize,
    pd: Option<f64>,
    pt_given_h3: Option<f64>,
    n_mj: f64,
    n_g: f64,
    hausdorff_rms: f64,
    p_h00: Option<f64>,
    p_h1: Option<f64>,
    p_h2: Option<f64>,
    p_h3: Option<f64>,
    lrt_threshold: f64,
    peak_threshold: f64,
    seed: u64,
}

/// Writes `<prefix>.csv` (one aggregate row per point), `<prefix>.jsonl`
/// (one line per trial) and `<prefix>.json` (config and thresholds).
/// Returns the three paths in that order.
pub fn write_classification(
    report: &ClassificationReport,
    config: &ClassificationConfig,
    prefix: &Path,
) -> Result<[PathBuf; 3]> {
    let with_ext = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    let (csv_path, jsonl_path, json_path) = (with_ext("csv"), with_ext("jsonl"), with_ext("json"));

    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| csv_error(&csv_path, e))?;
    for p in &report.points {
        let m = &p.metrics;
        let row = m.confusion()[p.truth.index()];
        let cell = |h: Hypothesis| row.map(|r| r[h.index()]);
        w.serialize(AggregateRow {
            sinr_db: p.sinr_db,
            truth: p.truth,
            n_trials: m.n_trials,
            pd: m.pd,
            pt_given_h3: m.pt_given_h3,
            n_mj: m.n_mj,
            n_g: m.n_g,
            hausdorff_rms: m.hausdorff_rms,
            p_h00: cell(Hypothesis::H00),
            p_h1: cell(Hypothesis::H1),
            p_h2: cell(Hypothesis::H2),
            p_h3: cell(Hypothesis::H3),
            lrt_threshold: report.thresholds.lrt,
            peak_threshold: report.thresholds.peak,
            seed: config.base_seed,
        })
        .map_err(|e| csv_error(&csv_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let file = std::fs::File::create(&jsonl_path).map_err(|e| Error::io(&jsonl_path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for t in &report.trials {
        serde_json::to_writer(&mut out, t).map_err(|e| Error::Serialize(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| Error::io(&jsonl_path, e))?;
    }
    out.flush().map_err(|e| Error::io(&jsonl_path, e))?;

    let sidecar = Sidecar {
        config,
        thresholds: &report.thresholds,
    };
    let mut text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Serialize(e.to_string()))?;
    text.push('\n');
    std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    Ok([csv_path, jsonl_path, json_path])
}
