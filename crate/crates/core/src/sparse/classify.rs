use serde::{Deserialize, Serialize};

use super::{AngleGrid, SparseEstimate};
use crate::scenario::Hypothesis;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationOutcome {
    pub decided: Hypothesis,
    /// Per-subset occupancy of the gated estimate.
    pub gamma_bar: Vec<u8>,
    /// Per-subset occupancy of the true scene, when known.
    pub gamma_true: Option<Vec<u8>>,
    /// The test passed but no peak survived gating.
    pub anomaly: bool,
}

impl ClassificationOutcome {
    pub fn with_truth(mut self, gamma_true: Vec<u8>) -> Self {
        self.gamma_true = Some(gamma_true);
        self
    }

    pub fn occupied(&self) -> Vec<usize> {
        occupied(&self.gamma_bar)
    }
}

/// Per-subset 0/1 occupancy of a set of grid indices.
pub fn occupancy(grid: &AngleGrid, indices: impl IntoIterator<Item = usize>) -> Vec<u8> {
    let mut gamma = vec![0u8; grid.n_subsets()];
    for s in indices.into_iter().filter_map(|i| grid.subset_of(i)) {
        gamma[s] = 1;
    }
    gamma
}

fn occupied(gamma: &[u8]) -> Vec<usize> {
    gamma
        .iter()
        .enumerate()
        .filter(|(_, &g)| g != 0)
        .map(|(s, _)| s)
        .collect()
}

/// Gates the support at `peak_threshold` and decides among the hypotheses
/// from the set of occupied subsets.
pub fn classify(
    estimate: &SparseEstimate,
    grid: &AngleGrid,
    lrt_pass: bool,
    peak_threshold: f64,
) -> ClassificationOutcome {
    assert_eq!(
        estimate.alpha.len(),
        grid.len(),
        "estimate and grid lengths differ"
    );
    let kept = estimate
        .support
        .iter()
        .copied()
        .filter(|&i| estimate.alpha[i].norm() > peak_threshold);
    let gamma_bar = occupancy(grid, kept);
    let omega = occupied(&gamma_bar);
    let has_target = omega.contains(&grid.target_subset());

    let (decided, anomaly) = if !lrt_pass {
        (Hypothesis::H00, false)
    } else {
        match omega.len() {
            0 => {
                log::debug!("test passed but no peak survived gating; deciding H00");
                (Hypothesis::H00, true)
            }
            1 if has_target => (Hypothesis::H1, false),
            1 => (Hypothesis::H2, false),
            _ if has_target => (Hypothesis::H3, false),
            _ => (Hypothesis::H2, false),
        }
    };
    ClassificationOutcome {
        decided,
        gamma_bar,
        gamma_true: None,
        anomaly,
    }
}

/// Hausdorff distance between index sets under `|x - y|`.
///
/// Two empty sets are at distance 0; an empty and a non-empty set are at
/// infinite distance.
pub fn hausdorff(x: &[usize], y: &[usize]) -> f64 {
    match (x.is_empty(), y.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let directed = |a: &[usize], b: &[usize]| {
        a.iter()
            .map(|&p| b.iter().map(|&q| p.abs_diff(q)).min().unwrap_or(0))
            .max()
            .unwrap_or(0)
    };
    directed(x, y).max(directed(y, x)) as f64
}

/// What one classification trial produced, with the ground truth needed to
/// score it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub truth: Hypothesis,
    pub decided: Hypothesis,
    pub lrt_pass: bool,
    pub gamma_bar: Vec<u8>,
    /// Occupancy of the true target (if present) and coherent jammers.
    pub gamma_true: Vec<u8>,
    /// Subsets holding a coherent jammer in this trial.
    pub jammer_subsets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub n_trials: usize,
    /// RMS number of jammer subsets left unoccupied.
    pub n_mj: f64,
    /// RMS number of occupied subsets holding neither target nor jammer.
    pub n_g: f64,
    /// RMS Hausdorff distance between estimated and true occupied subsets,
    /// with the empty-versus-non-empty case counted as the number of subsets.
    pub hausdorff_rms: f64,
    /// Fraction of trials passing the test among trials with a target or a
    /// coherent jammer.
    pub pd: Option<f64>,
    /// Fraction of `H3` trials decided as `H1` or `H3`.
    pub pt_given_h3: Option<f64>,
    /// `confusion_counts[truth][decided]`, indexed `H00, H1, H2, H3`.
    pub confusion_counts: [[u64; 4]; 4],
}

impl ScenarioMetrics {
    /// Row-normalised `P(decided | truth)`; rows without trials are `None`.
    pub fn confusion(&self) -> [Option<[f64; 4]>; 4] {
        let mut out = [None; 4];
        for (row, counts) in out.iter_mut().zip(self.confusion_counts.iter()) {
            let total: u64 = counts.iter().sum();
            if total > 0 {
                let mut p = [0.0; 4];
                for (pi, &c) in p.iter_mut().zip(counts.iter()) {
                    *pi = c as f64 / total as f64;
                }
                *row = Some(p);
            }
        }
        out
    }

    pub fn probability(&self, truth: Hypothesis, decided: Hypothesis) -> Option<f64> {
        self.confusion()[truth.index()].map(|row| row[decided.index()])
    }
}

/// Aggregates trial records. `n_subsets` caps the Hausdorff distance when
/// one of the two sets is empty.
pub fn scenario_metrics(records: &[TrialRecord], n_subsets: usize) -> ScenarioMetrics {
    let mut sum_mj = 0.0;
    let mut sum_g = 0.0;
    let mut sum_h = 0.0;
    let mut alt = (0usize, 0usize);
    let mut h3 = (0usize, 0usize);
    let mut confusion_counts = [[0u64; 4]; 4];

    for r in records {
        let missed = r
            .jammer_subsets
            .iter()
            .filter(|&&s| r.gamma_bar.get(s).copied().unwrap_or(0) == 0)
            .count() as f64;
        let ghosts = r
            .gamma_bar
            .iter()
            .zip(r.gamma_true.iter())
            .filter(|(&est, &tru)| est != 0 && tru == 0)
            .count() as f64;
        let d = hausdorff(&occupied(&r.gamma_bar), &occupied(&r.gamma_true));
        let d = if d.is_finite() { d } else { n_subsets as f64 };
        sum_mj += missed * missed;
        sum_g += ghosts * ghosts;
        sum_h += d * d;

        if r.truth != Hypothesis::H00 {
            alt.0 += 1;
            alt.1 += r.lrt_pass as usize;
        }
        if r.truth == Hypothesis::H3 {
            h3.0 += 1;
            h3.1 += r.decided.has_target() as usize;
        }
        confusion_counts[r.truth.index()][r.decided.index()] += 1;
    }

    let n = records.len();
    let rms = |s: f64| if n == 0 { 0.0 } else { (s / n as f64).sqrt() };
    let frac = |(total, hits): (usize, usize)| (total > 0).then(|| hits as f64 / total as f64);
    ScenarioMetrics {
        n_trials: n,
        n_mj: rms(sum_mj),
        n_g: rms(sum_g),
        hausdorff_rms: rms(sum_h),
        pd: frac(alt),
        pt_given_h3: frac(h3),
        confusion_counts,
    }
}
