//! Sparse recovery of target and coherent-jammer amplitudes over an angle
//! grid, the adaptive likelihood-ratio test built on it, and the
//! hypothesis classifier.

mod classify;
mod slim;

pub use classify::{
    classify, hausdorff, occupancy, scenario_metrics, ClassificationOutcome, ScenarioMetrics,
    TrialRecord,
};
pub use slim::{
    default_q_grid, initial_estimate, objective_g, refit, select_q, slim_iterate,
    slim_iterate_traced, stationarity_residual, QScore, SlimOptions, SlimRun, SparseEstimate,
};

use serde::{Deserialize, Serialize};

use crate::covariance;
use crate::detectors::{estimate_rank, RankMethod};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, EigenSystem};
use crate::scenario::{steering_matrix, ArrayGeometry};

/// Uniformly indexed angle grid partitioned into contiguous subsets of
/// `subset_size` angles. Subsets are aligned so that the target angle sits
/// in the middle of its own subset; grid points before `offset` or after the
/// last full subset belong to no subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    angles_deg: Vec<f64>,
    subset_size: usize,
    offset: usize,
    n_subsets: usize,
    target_subset: usize,
}

impl AngleGrid {
    pub fn new(angles_deg: Vec<f64>, subset_size: usize, target_deg: f64) -> Result<Self> {
        if angles_deg.is_empty() || subset_size == 0 {
            return Err(Error::InvalidConfig(
                "angle grid and subset size must be non-empty".into(),
            ));
        }
        if angles_deg.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("grid angles must be ascending".into()));
        }
        if angles_deg.iter().any(|a| !(a.abs() < 90.0)) {
            return Err(Error::InvalidConfig("grid angles must lie in (-90, 90)".into()));
        }
        let target = nearest(&angles_deg, target_deg)
            .filter(|&i| (angles_deg[i] - target_deg).abs() < 1e-9)
            .ok_or_else(|| {
                Error::InvalidConfig(format!("target angle {target_deg} is not a grid point"))
            })?;
        let half = subset_size / 2;
        if target < half || target - half + subset_size > angles_deg.len() {
            return Err(Error::InvalidConfig(
                "target subset does not fit inside the grid".into(),
            ));
        }
        let start = target - half;
        let offset = start % subset_size;
        let n_subsets = (angles_deg.len() - offset) / subset_size;
        Ok(AngleGrid {
            angles_deg,
            subset_size,
            offset,
            n_subsets,
            target_subset: (start - offset) / subset_size,
        })
    }

    /// `start, start + step, …` up to and including `stop`.
    pub fn uniform(
        start_deg: f64,
        stop_deg: f64,
        step_deg: f64,
        subset_size: usize,
        target_deg: f64,
    ) -> Result<Self> {
        if !(step_deg > 0.0) || !(stop_deg >= start_deg) {
            return Err(Error::InvalidConfig("invalid angle range".into()));
        }
        let count = ((stop_deg - start_deg) / step_deg + 1e-9).floor() as usize + 1;
        let angles = (0..count).map(|i| start_deg + i as f64 * step_deg).collect();
        Self::new(angles, subset_size, target_deg)
    }

    /// −22°…22° at 1°, subsets of 5, target at 0°.
    pub fn standard() -> Self {
        Self::uniform(-22.0, 22.0, 1.0, 5, 0.0).expect("standard grid is valid")
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    pub fn subset_size(&self) -> usize {
        self.subset_size
    }

    /// Index of the first grid point of subset 0.
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn n_subsets(&self) -> usize {
        self.n_subsets
    }

    pub fn target_subset(&self) -> usize {
        self.target_subset
    }

    /// Subset containing grid index `idx`, if any.
    pub fn subset_of(&self, idx: usize) -> Option<usize> {
        if idx < self.offset {
            return None;
        }
        let s = (idx - self.offset) / self.subset_size;
        (s < self.n_subsets).then_some(s)
    }

    /// Grid indices belonging to subset `s`.
    pub fn subset_indices(&self, s: usize) -> std::ops::Range<usize> {
        let lo = self.offset + s * self.subset_size;
        lo..lo + self.subset_size
    }

    /// Grid index closest to `deg`.
    pub fn nearest_index(&self, deg: f64) -> Option<usize> {
        nearest(&self.angles_deg, deg)
    }

    /// Subset containing the grid point closest to `deg`.
    pub fn subset_of_angle(&self, deg: f64) -> Option<usize> {
        self.nearest_index(deg).and_then(|i| self.subset_of(i))
    }

    pub fn steering_matrix(&self, geometry: &ArrayGeometry) -> CMatrix {
        steering_matrix(geometry, &self.angles_deg)
    }
}

fn nearest(angles: &[f64], deg: f64) -> Option<usize> {
    angles
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - deg).abs().total_cmp(&(b.1 - deg).abs()))
        .map(|(i, _)| i)
}

/// `z† M⁻¹ z - (z - Vᾱ)† M⁻¹ (z - Vᾱ)`.
pub fn lrt_statistic(z: &CVector, v: &CMatrix, alpha_bar: &CVector, m1_hat: &CMatrix) -> Result<f64> {
    if v.nrows() != z.len() || v.ncols() != alpha_bar.len() {
        return Err(Error::Dimension(format!(
            "grid matrix is {}x{}, data has {} entries, amplitudes {}",
            v.nrows(),
            v.ncols(),
            z.len(),
            alpha_bar.len()
        )));
    }
    let chol = linalg::cholesky(m1_hat, "M1 estimate")?;
    let residual = z - v * alpha_bar;
    let full = linalg::inner(z, &chol.solve(z)).re;
    let rest = linalg::inner(&residual, &chol.solve(&residual)).re;
    Ok(full - rest)
}

/// The same statistic in the whitened domain: `‖y‖² - ‖y - Aᾱ‖²`.
pub fn whitened_lrt(a: &CMatrix, y: &CVector, alpha_bar: &CVector) -> f64 {
    linalg::norm_sqr(y) - linalg::norm_sqr(&(y - a * alpha_bar))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseParams {
    pub q_grid: Vec<f64>,
    pub slim: SlimOptions,
    /// Largest support size tried in the refit; `None` means `min(N-1, 10)`.
    pub h_max: Option<usize>,
    pub rank_method: RankMethod,
    pub n_max: Option<usize>,
}

impl Default for SparseParams {
    fn default() -> Self {
        SparseParams {
            q_grid: default_q_grid(),
            slim: SlimOptions::default(),
            h_max: None,
            rank_method: RankMethod::Bic,
            n_max: None,
        }
    }
}

impl SparseParams {
    pub fn h_max_for(&self, n: usize) -> usize {
        self.h_max.unwrap_or_else(|| (n - 1).min(10))
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_grid.is_empty() || self.q_grid.iter().any(|q| !(*q > 0.0 && *q <= 1.0)) {
            return Err(Error::InvalidConfig("q grid must be a non-empty subset of (0, 1]".into()));
        }
        if !(self.slim.delta > 0.0) || self.slim.max_iter == 0 {
            return Err(Error::InvalidConfig("SLIM needs delta > 0 and max_iter >= 1".into()));
        }
        Ok(())
    }
}

/// Whitened sparse-recovery problem for a fixed covariance estimate: holds
/// `W = M̂1^{-1/2}` and `A = W V`, so several cells under test can share the
/// same training data.
#[derive(Debug, Clone)]
pub struct SparseProblem {
    whitener: CMatrix,
    a: CMatrix,
    m1_hat: CMatrix,
    r_hat: usize,
}

impl SparseProblem {
    pub fn new(m1_hat: CMatrix, grid_matrix: &CMatrix, r_hat: usize) -> Result<Self> {
        if grid_matrix.nrows() != m1_hat.nrows() {
            return Err(Error::Dimension(format!(
                "grid matrix has {} rows, covariance is {}x{}",
                grid_matrix.nrows(),
                m1_hat.nrows(),
                m1_hat.ncols()
            )));
        }
        let eig = EigenSystem::of_hermitian(&m1_hat);
        if !eig.is_positive_definite() {
            return Err(Error::NotPositiveDefinite { what: "M1 estimate" });
        }
        let whitener = eig.reconstruct_with(|v| 1.0 / v.sqrt());
        let a = &whitener * grid_matrix;
        Ok(SparseProblem {
            whitener,
            a,
            m1_hat,
            r_hat,
        })
    }

    /// Estimates `M1` from the training sets (rank chosen by `params`) and
    /// whitens the grid.
    pub fn from_training(
        zt: &CMatrix,
        rt: &CMatrix,
        grid_matrix: &CMatrix,
        params: &SparseParams,
    ) -> Result<Self> {
        let gram_eig = EigenSystem::of_hermitian(&linalg::gram(rt));
        let rank = estimate_rank(&gram_eig, rt.ncols(), params.rank_method, params.n_max)?;
        let m2 = covariance::estimate_m2_from_gram_eigen(&gram_eig, rt.ncols(), rank.r_hat)?;
        let m1 = covariance::compose_m1(zt, m2, 0.0)?;
        Self::new(m1.matrix, grid_matrix, rank.r_hat)
    }

    pub fn model_matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn m1_hat(&self) -> &CMatrix {
        &self.m1_hat
    }

    pub fn r_hat(&self) -> usize {
        self.r_hat
    }

    pub fn whiten(&self, z: &CVector) -> CVector {
        &self.whitener * z
    }

    /// Sparse estimate and LRT statistic for one cell under test.
    pub fn solve(&self, z: &CVector, params: &SparseParams) -> Result<SparseSolution> {
        let y = self.whiten(z);
        let estimate = select_q(
            &self.a,
            &y,
            &params.q_grid,
            params.h_max_for(self.a.nrows()),
            &params.slim,
        )?;
        let lrt = whitened_lrt(&self.a, &y, &estimate.alpha);
        Ok(SparseSolution { estimate, lrt })
    }
}

#[derive(Debug, Clone)]
pub struct SparseSolution {
    pub estimate: SparseEstimate,
    pub lrt: f64,
}

impl SparseSolution {
    /// Largest refitted magnitude among the target-subset grid points.
    pub fn target_peak(&self, grid: &AngleGrid) -> f64 {
        grid.subset_indices(grid.target_subset())
            .map(|i| self.estimate.alpha[i].norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn standard_grid_layout() {
        let g = AngleGrid::standard();
        assert_eq!(g.len(), 45);
        assert_eq!(g.n_subsets(), 9);
        assert_eq!(g.offset(), 0);
        assert_eq!(g.target_subset(), 4);
        let t: Vec<f64> = g.subset_indices(4).map(|i| g.angles_deg()[i]).collect();
        assert_eq!(t, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(g.subset_of_angle(-14.0), Some(1));
        assert_eq!(g.subset_of_angle(16.0), Some(7));
        assert_eq!(g.subset_of_angle(10.0), Some(6));
    }

    #[test]
    fn offset_grid() {
        let g = AngleGrid::uniform(-10.0, 10.0, 1.0, 5, 1.0).unwrap();
        assert_eq!(g.offset(), 4);
        assert_eq!(g.subset_of(3), None);
        assert_eq!(g.subset_of(g.nearest_index(1.0).unwrap()), Some(g.target_subset()));
        let mid = g.subset_indices(g.target_subset()).nth(2).unwrap();
        assert_eq!(g.angles_deg()[mid], 1.0);
    }

    #[test]
    fn off_grid_target_rejected() {
        assert!(AngleGrid::uniform(-10.0, 10.0, 1.0, 5, 0.5).is_err());
        assert!(AngleGrid::uniform(-10.0, 10.0, 1.0, 5, -10.0).is_err());
    }

    #[test]
    fn lrt_zero_amplitude() {
        let v = CMatrix::identity(3, 4);
        let z = CVector::from_vec(vec![c(1.0), c(2.0), c(-1.0)]);
        let s = lrt_statistic(&z, &v, &CVector::zeros(4), &CMatrix::identity(3, 3)).unwrap();
        assert_eq!(s, 0.0);
    }
}
