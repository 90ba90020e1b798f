//! Jammer-subspace rank selection from the clutter-free training set.
//!
//! Two families are provided: penalised-likelihood rules (AIC, GIC, BIC) on
//! the compressed log-likelihood, and a tail-first eigenvalue-gap rule that
//! looks for the drop in magnitude separating jammer eigenvalues from the
//! noise floor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, EigenSystem};

/// Penalised-likelihood rule. The penalty is `k_p(r) · ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum MosRule {
    Aic,
    Bic,
    /// Generalised criterion with `ν = 1 + rho`, `rho ≥ 1`.
    Gic { rho: f64 },
}

impl MosRule {
    /// Penalty factor ν for `samples` training vectors.
    pub fn nu(&self, samples: usize) -> f64 {
        match *self {
            MosRule::Aic => 2.0,
            MosRule::Bic => (samples as f64).ln(),
            MosRule::Gic { rho } => 1.0 + rho,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            MosRule::Gic { rho } if !(rho >= 1.0) => Err(Error::InvalidConfig(format!(
                "GIC parameter must be at least 1, got {rho}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEstimate {
    pub r_hat: usize,
    /// Criterion value per candidate rank (MOS rules), or the normalised
    /// eigen-gaps `Δ_i` for `i = 1..N-1` (gap rule).
    pub scores: Vec<f64>,
}

/// Number of real parameters of the rank-`r` model.
pub fn parameter_count(n: usize, rank: usize) -> usize {
    rank * (2 * n - rank) + 1
}

/// Default upper bound on the number of jammers: `N / 2`.
pub fn default_n_max(n: usize) -> usize {
    (n / 2).max(1)
}

/// Compressed log-likelihood of `R` under the rank-`r` model.
pub fn compressed_loglik(rt: &CMatrix, rank: usize) -> Result<f64> {
    let eig = EigenSystem::of_hermitian(&linalg::gram(rt));
    compressed_loglik_from_eigs(&eig.values, rt.ncols(), rank)
}

/// [`compressed_loglik`] from the descending eigenvalues of `R R†`.
/// A vanishing tail yields `-inf`.
pub fn compressed_loglik_from_eigs(gram_eigs: &[f64], samples: usize, rank: usize) -> Result<f64> {
    let n = gram_eigs.len();
    if rank >= n {
        return Err(Error::RankOutOfRange { rank, n });
    }
    let m = samples as f64;
    let nf = n as f64;
    let tail_len = (n - rank) as f64;
    let tail: f64 = gram_eigs[rank..].iter().sum();
    if !(tail > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let head: f64 = gram_eigs[..rank].iter().map(|g| (g / m).ln()).sum();
    Ok(-m * nf * std::f64::consts::PI.ln() - m * head - m * tail_len * (tail / (m * tail_len)).ln()
        - m * nf)
}

/// Model-order selection by penalised likelihood over `r ∈ {0, …, n_max}`.
/// Ties go to the smaller rank.
pub fn mos_select(rt: &CMatrix, rule: MosRule, n_max: usize) -> Result<RankEstimate> {
    let eig = EigenSystem::of_hermitian(&linalg::gram(rt));
    mos_select_from_eigs(&eig.values, rt.ncols(), rule, n_max)
}

pub fn mos_select_from_eigs(
    gram_eigs: &[f64],
    samples: usize,
    rule: MosRule,
    n_max: usize,
) -> Result<RankEstimate> {
    rule.validate()?;
    let n = gram_eigs.len();
    if n_max == 0 || n_max >= n {
        return Err(Error::InvalidConfig(format!(
            "n_max must lie in [1, {}], got {n_max}",
            n - 1
        )));
    }
    let nu = rule.nu(samples);
    let mut scores = Vec::with_capacity(n_max + 1);
    for r in 0..=n_max {
        let ll = compressed_loglik_from_eigs(gram_eigs, samples, r)?;
        scores.push(-2.0 * ll + parameter_count(n, r) as f64 * nu);
    }
    let mut r_hat = 0;
    for (r, &s) in scores.iter().enumerate() {
        if s < scores[r_hat] {
            r_hat = r;
        }
    }
    Ok(RankEstimate { r_hat, scores })
}

/// Eigenvalue-gap rule. Scans `i = N-1, …, 1` and stops at the first
/// `Δ_i = (γ_i - γ_{i+1})/M` above `threshold`; `r̂ = 0` if none is found.
pub fn eig_gap_select(rt: &CMatrix, threshold: f64) -> Result<RankEstimate> {
    let eig = EigenSystem::of_hermitian(&linalg::gram(rt));
    let scaled: Vec<f64> = eig.values.iter().map(|g| g / rt.ncols() as f64).collect();
    eig_gap_select_from_scaled(&scaled, threshold)
}

/// Gap rule on the eigenvalues of `R R† / M` (descending).
pub fn eig_gap_select_from_scaled(scaled_eigs: &[f64], threshold: f64) -> Result<RankEstimate> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "eigen-gap threshold must be positive, got {threshold}"
        )));
    }
    let scores: Vec<f64> = scaled_eigs.windows(2).map(|w| w[0] - w[1]).collect();
    // scores[i - 1] holds Δ_i for 1-based i.
    let r_hat = (1..scaled_eigs.len())
        .rev()
        .find(|&i| scores[i - 1] > threshold)
        .unwrap_or(0);
    Ok(RankEstimate { r_hat, scores })
}
