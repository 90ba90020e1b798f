//! Two-step maximum-likelihood estimation of the interference covariance.
//!
//! The clutter-free training set `R` gives the structured estimate of
//! `M2 = σ²I + Mnj` for a known jammer-subspace rank. With `M2` fixed, the
//! clutter-bearing set `Z` gives the estimate of the clutter component `Mc`
//! in the whitened domain, and the sum of the two is the estimate of `M1`.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, EigenSystem, PSD_FLOOR};

/// Structured estimate of the clutter-free covariance.
#[derive(Debug, Clone)]
pub struct M2Estimate {
    pub matrix: CMatrix,
    pub noise_power_hat: f64,
    pub rank_used: usize,
    /// Eigenvalues of `matrix` in descending order (top `rank_used` are
    /// `γ_i/M`, the rest equal `noise_power_hat`).
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors shared by `R R†` and the estimate.
    pub eigenvectors: CMatrix,
}

impl M2Estimate {
    /// Unique Hermitian positive-definite square root.
    pub fn sqrt(&self) -> CMatrix {
        let d: Vec<f64> = self.eigenvalues.iter().map(|v| v.sqrt()).collect();
        linalg::reconstruct(&self.eigenvectors, &d)
    }

    pub fn inv_sqrt(&self) -> CMatrix {
        let d: Vec<f64> = self.eigenvalues.iter().map(|v| 1.0 / v.sqrt()).collect();
        linalg::reconstruct(&self.eigenvectors, &d)
    }
}

/// Clutter component estimate for a given `M2`.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub matrix: CMatrix,
    /// `max(γ_{2,i}/K - 1, 0)`, descending.
    pub clutter_eigs: Vec<f64>,
    /// Eigenvalues `γ_{2,i}` of the whitened Gram matrix, descending.
    pub whitened_eigs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct M1Estimate {
    pub matrix: CMatrix,
    pub m2: M2Estimate,
    pub mc: McEstimate,
}

/// Estimate of `M2` from clutter-free training data `R` (`N x M`) assuming
/// the jammer subspace has rank `rank`.
pub fn estimate_m2(rt: &CMatrix, rank: usize) -> Result<M2Estimate> {
    let eig = EigenSystem::of_hermitian(&linalg::gram(rt));
    estimate_m2_from_gram_eigen(&eig, rt.ncols(), rank)
}

/// Same as [`estimate_m2`] but reuses a decomposition of `R R†`.
pub fn estimate_m2_from_gram_eigen(
    gram_eig: &EigenSystem,
    samples: usize,
    rank: usize,
) -> Result<M2Estimate> {
    let n = gram_eig.dim();
    if rank >= n {
        return Err(Error::RankOutOfRange { rank, n });
    }
    if samples == 0 {
        return Err(Error::InsufficientTraining(
            "clutter-free training set is empty".into(),
        ));
    }
    let m = samples as f64;
    let tail: f64 = gram_eig.values[rank..].iter().sum();
    let noise_power_hat = tail / (m * (n - rank) as f64);
    let top = gram_eig.values[0] / m;
    if !(noise_power_hat > PSD_FLOOR * top) {
        return Err(Error::DegenerateNoise { rank, samples });
    }

    let eigenvalues: Vec<f64> = (0..n)
        .map(|i| {
            if i < rank {
                gram_eig.values[i] / m
            } else {
                noise_power_hat
            }
        })
        .collect();
    let matrix = linalg::reconstruct(&gram_eig.vectors, &eigenvalues);
    Ok(M2Estimate {
        matrix,
        noise_power_hat,
        rank_used: rank,
        eigenvalues,
        eigenvectors: gram_eig.vectors.clone(),
    })
}

/// Estimate of the clutter covariance from `Z` (`N x K`) for a known `M2`.
pub fn estimate_mc(zt: &CMatrix, m2: &CMatrix) -> Result<McEstimate> {
    let eig = EigenSystem::of_hermitian(m2);
    if !eig.is_positive_definite() {
        return Err(Error::NotPositiveDefinite { what: "M2" });
    }
    let sqrt = eig.reconstruct_with(f64::sqrt);
    let inv_sqrt = eig.reconstruct_with(|v| 1.0 / v.sqrt());
    clutter_given_roots(zt, &sqrt, &inv_sqrt)
}

fn clutter_given_roots(zt: &CMatrix, sqrt: &CMatrix, inv_sqrt: &CMatrix) -> Result<McEstimate> {
    let k = zt.ncols();
    if k == 0 {
        return Err(Error::InsufficientTraining(
            "clutter-bearing training set is empty".into(),
        ));
    }
    if zt.nrows() != sqrt.nrows() {
        return Err(Error::Dimension(format!(
            "training vectors have {} entries, covariance is {}x{}",
            zt.nrows(),
            sqrt.nrows(),
            sqrt.ncols()
        )));
    }
    let whitened = inv_sqrt * zt;
    let eig = EigenSystem::of_hermitian(&linalg::gram(&whitened));
    let kf = k as f64;
    let clutter_eigs: Vec<f64> = eig
        .values
        .iter()
        .map(|&g| (g / kf - 1.0).max(0.0))
        .collect();
    let inner = linalg::reconstruct(&eig.vectors, &clutter_eigs);
    let mut matrix = sqrt * inner * sqrt;
    linalg::hermitize(&mut matrix);
    Ok(McEstimate {
        matrix,
        clutter_eigs,
        whitened_eigs: eig.values,
    })
}

/// Clutter estimate on top of a structured `M2` estimate. Reuses the
/// eigenvectors of the `M2` estimate for its square roots.
pub fn estimate_mc_given(zt: &CMatrix, m2: &M2Estimate) -> Result<McEstimate> {
    clutter_given_roots(zt, &m2.sqrt(), &m2.inv_sqrt())
}

/// Full two-step estimate of `M1` for a known jammer rank.
pub fn estimate_m1(zt: &CMatrix, rt: &CMatrix, rank: usize) -> Result<M1Estimate> {
    estimate_m1_loaded(zt, rt, rank, 0.0)
}

/// [`estimate_m1`] with `loading · I` added to the result.
pub fn estimate_m1_loaded(
    zt: &CMatrix,
    rt: &CMatrix,
    rank: usize,
    loading: f64,
) -> Result<M1Estimate> {
    let m2 = estimate_m2(rt, rank)?;
    compose_m1(zt, m2, loading)
}

/// Second step: adds the clutter estimate to an existing `M2` estimate.
pub fn compose_m1(zt: &CMatrix, m2: M2Estimate, loading: f64) -> Result<M1Estimate> {
    let mc = estimate_mc_given(zt, &m2)?;
    let n = m2.matrix.nrows();
    let mut matrix = &m2.matrix + &mc.matrix;
    if loading != 0.0 {
        matrix += CMatrix::identity(n, n).scale(loading);
    }
    Ok(M1Estimate { matrix, m2, mc })
}

/// Sample covariance `X X† / cols`.
pub fn sample_covariance(x: &CMatrix) -> CMatrix {
    linalg::gram(x).scale(1.0 / x.ncols() as f64)
}
