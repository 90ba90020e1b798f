//! Matched-filter statistics and the adaptive detector pipelines built on the
//! two-step covariance estimate.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::covariance::{self, sample_covariance};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, EigenSystem};
use crate::rank_select::{self, MosRule, RankEstimate};

/// How the jammer-subspace rank is obtained inside the adaptive pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum RankMethod {
    Known { rank: usize },
    Aic,
    Bic,
    Gic { rho: f64 },
    Eig { threshold: f64 },
}

impl RankMethod {
    pub fn estimator_id(&self) -> EstimatorId {
        match self {
            RankMethod::Known { .. } => EstimatorId::IdtAmf,
            RankMethod::Aic => EstimatorId::IdtAmfAic,
            RankMethod::Bic => EstimatorId::IdtAmfBic,
            RankMethod::Gic { .. } => EstimatorId::IdtAmfGic,
            RankMethod::Eig { .. } => EstimatorId::IdtAmfEig,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorId {
    Mf,
    ScmAmf,
    IdtAmf,
    IdtAmfAic,
    IdtAmfBic,
    IdtAmfGic,
    IdtAmfEig,
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorId::Mf => "MF",
            EstimatorId::ScmAmf => "SCM-AMF",
            EstimatorId::IdtAmf => "IDT-AMF",
            EstimatorId::IdtAmfAic => "IDT-AMF-AIC",
            EstimatorId::IdtAmfBic => "IDT-AMF-BIC",
            EstimatorId::IdtAmfGic => "IDT-AMF-GIC",
            EstimatorId::IdtAmfEig => "IDT-AMF-EIG",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: bool,
    pub r_hat: Option<usize>,
    pub estimator_id: EstimatorId,
}

impl DetectorOutput {
    fn new(statistic: f64, threshold: f64, r_hat: Option<usize>, id: EstimatorId) -> Self {
        DetectorOutput {
            statistic,
            threshold,
            decision: statistic > threshold,
            r_hat,
            estimator_id: id,
        }
    }
}

/// Precomputed `M⁻¹v` and `v†M⁻¹v` for repeated evaluation of the
/// matched-filter statistic with the same covariance and steering vector.
#[derive(Debug, Clone)]
pub struct MatchedFilter {
    weights: CVector,
    gain: f64,
}

impl MatchedFilter {
    pub fn new(m: &CMatrix, v: &CVector) -> Result<Self> {
        if v.iter().all(|z| z.norm_sqr() == 0.0) {
            return Err(Error::InvalidConfig("steering vector is zero".into()));
        }
        if m.nrows() != v.len() {
            return Err(Error::Dimension(format!(
                "covariance is {}x{}, steering vector has {} entries",
                m.nrows(),
                m.ncols(),
                v.len()
            )));
        }
        let chol = linalg::cholesky(m, "covariance")?;
        let weights = chol.solve(v);
        let gain = linalg::inner(v, &weights).re;
        Ok(MatchedFilter { weights, gain })
    }

    /// `|z† M⁻¹ v|² / (v† M⁻¹ v)`.
    pub fn statistic(&self, z: &CVector) -> f64 {
        linalg::inner(z, &self.weights).norm_sqr() / self.gain
    }

    /// `v† M⁻¹ v`.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// `z† M⁻¹ v`, useful when `z` is a sum of fixed parts.
    pub fn projection(&self, z: &CVector) -> num_complex::Complex64 {
        linalg::inner(z, &self.weights)
    }
}

pub fn mf_statistic(z: &CVector, v: &CVector, m: &CMatrix) -> Result<f64> {
    Ok(MatchedFilter::new(m, v)?.statistic(z))
}

/// Clairvoyant matched filter with the true covariance.
pub fn mf_detector(z: &CVector, v: &CVector, m1: &CMatrix, threshold: f64) -> Result<DetectorOutput> {
    Ok(DetectorOutput::new(
        mf_statistic(z, v, m1)?,
        threshold,
        None,
        EstimatorId::Mf,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdtAmfParams {
    pub rank_method: RankMethod,
    /// Largest candidate rank for the MOS rules; defaults to `N/2`.
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub diagonal_loading: f64,
}

impl IdtAmfParams {
    pub fn new(rank_method: RankMethod) -> Self {
        IdtAmfParams {
            rank_method,
            n_max: None,
            diagonal_loading: 0.0,
        }
    }
}

/// Rank estimate from the eigenvalues of `R R†`.
///
/// Candidates stop at `M - 1`: with `r ≥ M` the noise tail of `R R†` is
/// numerically zero and the likelihood is unbounded.
pub fn estimate_rank(
    gram_eig: &EigenSystem,
    samples: usize,
    method: RankMethod,
    n_max: Option<usize>,
) -> Result<RankEstimate> {
    let n = gram_eig.dim();
    if samples == 0 {
        return Err(Error::InsufficientTraining(
            "clutter-free training set is empty".into(),
        ));
    }
    let n_max = n_max
        .unwrap_or_else(|| rank_select::default_n_max(n))
        .min(samples - 1);
    let mos = |rule: MosRule| {
        if n_max == 0 {
            rule.validate()?;
            return Ok(RankEstimate {
                r_hat: 0,
                scores: Vec::new(),
            });
        }
        rank_select::mos_select_from_eigs(&gram_eig.values, samples, rule, n_max)
    };
    match method {
        RankMethod::Known { rank } => {
            if rank >= n {
                return Err(Error::RankOutOfRange { rank, n });
            }
            Ok(RankEstimate {
                r_hat: rank,
                scores: Vec::new(),
            })
        }
        RankMethod::Aic => mos(MosRule::Aic),
        RankMethod::Bic => mos(MosRule::Bic),
        RankMethod::Gic { rho } => mos(MosRule::Gic { rho }),
        RankMethod::Eig { threshold } => {
            let scaled: Vec<f64> = gram_eig
                .values
                .iter()
                .take(samples)
                .map(|g| g / samples as f64)
                .collect();
            rank_select::eig_gap_select_from_scaled(&scaled, threshold)
        }
    }
}

/// Improved double-trained AMF: rank selection, two-step estimate of `M1`,
/// then the matched-filter statistic with the estimate.
pub fn idt_amf(
    z: &CVector,
    zt: &CMatrix,
    rt: &CMatrix,
    v: &CVector,
    params: &IdtAmfParams,
    threshold: f64,
) -> Result<DetectorOutput> {
    let gram_eig = EigenSystem::of_hermitian(&linalg::gram(rt));
    let rank = estimate_rank(&gram_eig, rt.ncols(), params.rank_method, params.n_max)?;
    let m2 = covariance::estimate_m2_from_gram_eigen(&gram_eig, rt.ncols(), rank.r_hat)?;
    let m1 = covariance::compose_m1(zt, m2, params.diagonal_loading)?;
    Ok(DetectorOutput::new(
        mf_statistic(z, v, &m1.matrix)?,
        threshold,
        Some(rank.r_hat),
        params.rank_method.estimator_id(),
    ))
}

/// AMF with the sample covariance of `Z`. Needs `K ≥ N`.
pub fn scm_amf(z: &CVector, zt: &CMatrix, v: &CVector, threshold: f64) -> Result<DetectorOutput> {
    check_scm_support(zt.nrows(), zt.ncols())?;
    Ok(DetectorOutput::new(
        mf_statistic(z, v, &sample_covariance(zt))?,
        threshold,
        None,
        EstimatorId::ScmAmf,
    ))
}

pub fn check_scm_support(n: usize, k: usize) -> Result<()> {
    if k < n {
        Err(Error::InsufficientTraining(format!(
            "sample covariance needs K >= N, got K = {k} < N = {n}"
        )))
    } else {
        Ok(())
    }
}

/// Which detector a Monte Carlo run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorSpec {
    Mf,
    ScmAmf,
    IdtAmf {
        #[serde(flatten)]
        params: IdtAmfParams,
    },
}

impl DetectorSpec {
    pub fn idt(rank_method: RankMethod) -> Self {
        DetectorSpec::IdtAmf {
            params: IdtAmfParams::new(rank_method),
        }
    }

    pub fn id(&self) -> EstimatorId {
        match self {
            DetectorSpec::Mf => EstimatorId::Mf,
            DetectorSpec::ScmAmf => EstimatorId::ScmAmf,
            DetectorSpec::IdtAmf { params } => params.rank_method.estimator_id(),
        }
    }
}

/// Per-trial cache that builds the matched filter for several detectors on
/// the same training data, sharing the `R R†` decomposition and the `M1`
/// estimate between detectors that select the same rank.
pub struct FilterBank<'a> {
    zt: &'a CMatrix,
    rt: &'a CMatrix,
    v: &'a CVector,
    gram_eig: Option<EigenSystem>,
    by_rank: BTreeMap<(usize, u64), MatchedFilter>,
}

impl<'a> FilterBank<'a> {
    pub fn new(zt: &'a CMatrix, rt: &'a CMatrix, v: &'a CVector) -> Self {
        FilterBank {
            zt,
            rt,
            v,
            gram_eig: None,
            by_rank: BTreeMap::new(),
        }
    }

    /// Filter and selected rank for `spec`. `true_m1` is used by the
    /// clairvoyant detector only.
    pub fn filter(
        &mut self,
        spec: &DetectorSpec,
        true_m1: &CMatrix,
    ) -> Result<(MatchedFilter, Option<usize>)> {
        match spec {
            DetectorSpec::Mf => Ok((MatchedFilter::new(true_m1, self.v)?, None)),
            DetectorSpec::ScmAmf => {
                check_scm_support(self.zt.nrows(), self.zt.ncols())?;
                Ok((MatchedFilter::new(&sample_covariance(self.zt), self.v)?, None))
            }
            DetectorSpec::IdtAmf { params } => {
                let rt = self.rt;
                let gram_eig = self
                    .gram_eig
                    .get_or_insert_with(|| EigenSystem::of_hermitian(&linalg::gram(rt)));
                let rank = estimate_rank(gram_eig, rt.ncols(), params.rank_method, params.n_max)?;
                let key = (rank.r_hat, params.diagonal_loading.to_bits());
                if let Some(f) = self.by_rank.get(&key) {
                    return Ok((f.clone(), Some(rank.r_hat)));
                }
                let m2 = covariance::estimate_m2_from_gram_eigen(gram_eig, rt.ncols(), rank.r_hat)?;
                let m1 = covariance::compose_m1(self.zt, m2, params.diagonal_loading)?;
                let f = MatchedFilter::new(&m1.matrix, self.v)?;
                self.by_rank.insert(key, f.clone());
                Ok((f, Some(rank.r_hat)))
            }
        }
    }
}
