//! Array geometry, interference covariance models and synthetic data.
//!
//! A [`ScenarioConfig`] fully describes one experiment. [`build_covariances`]
//! turns it into the clutter-bearing covariance `M1` and the clutter-free
//! covariance `M2`; [`synthesize`] draws the cell under test together with the
//! two training sets.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

/// Converts a power ratio in dB to linear scale. `-inf` maps to 0.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB. 0 maps to `-inf`.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// Number of array elements.
    pub n_elements: usize,
    /// Inter-element spacing over the carrier wavelength.
    pub spacing_ratio: f64,
}

impl ArrayGeometry {
    /// Uniform linear array at half-wavelength spacing.
    pub fn half_wavelength(n_elements: usize) -> Self {
        ArrayGeometry {
            n_elements,
            spacing_ratio: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammerKind {
    /// Broadband masking interference present in every range bin.
    NoiseLike,
    /// Deceptive, target-like return present only in the cell under test.
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JammerSpec {
    pub kind: JammerKind,
    pub aoa_deg: f64,
    /// JNR for noise-like jammers; `|β|²/σ²` for coherent ones.
    pub power_db: f64,
}

impl JammerSpec {
    pub fn noise_like(aoa_deg: f64, power_db: f64) -> Self {
        JammerSpec {
            kind: JammerKind::NoiseLike,
            aoa_deg,
            power_db,
        }
    }

    pub fn coherent(aoa_deg: f64, power_db: f64) -> Self {
        JammerSpec {
            kind: JammerKind::Coherent,
            aoa_deg,
            power_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub geometry: ArrayGeometry,
    /// Thermal noise power σ² (linear).
    pub noise_power: f64,
    /// One-lag correlation coefficient ρ of the exponential clutter model.
    pub clutter_one_lag: f64,
    /// Clutter-to-noise ratio; `-inf` disables clutter.
    pub cnr_db: f64,
    #[serde(default)]
    pub jammers: Vec<JammerSpec>,
    pub target_aoa_deg: f64,
    /// Number of clutter-bearing training vectors.
    pub k: usize,
    /// Number of clutter-free training vectors.
    pub m: usize,
    /// Draw a fresh uniform phase for every coherent jammer on every trial
    /// instead of the fixed zero phase.
    #[serde(default)]
    pub coherent_random_phase: bool,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.geometry.n_elements < 2 {
            return bad(format!(
                "n_elements must be at least 2, got {}",
                self.geometry.n_elements
            ));
        }
        if !(self.geometry.spacing_ratio > 0.0) {
            return bad("spacing_ratio must be positive".into());
        }
        if !(self.noise_power > 0.0) || !self.noise_power.is_finite() {
            return bad("noise_power must be positive and finite".into());
        }
        if !(0.0..1.0).contains(&self.clutter_one_lag) {
            return bad(format!(
                "clutter_one_lag must lie in [0, 1), got {}",
                self.clutter_one_lag
            ));
        }
        if self.cnr_db.is_nan() || self.cnr_db == f64::INFINITY {
            return bad("cnr_db must be finite or -inf".into());
        }
        if self.k == 0 || self.m == 0 {
            return bad("k and m must both be at least 1".into());
        }
        check_aoa(self.target_aoa_deg)?;
        for j in &self.jammers {
            check_aoa(j.aoa_deg)?;
            if !j.power_db.is_finite() {
                return bad(format!("jammer power must be finite, got {}", j.power_db));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.geometry.n_elements
    }

    pub fn noise_like_jammers(&self) -> impl Iterator<Item = &JammerSpec> {
        self.jammers
            .iter()
            .filter(|j| j.kind == JammerKind::NoiseLike)
    }

    pub fn coherent_jammers(&self) -> impl Iterator<Item = &JammerSpec> {
        self.jammers.iter().filter(|j| j.kind == JammerKind::Coherent)
    }

    pub fn has_coherent(&self) -> bool {
        self.coherent_jammers().next().is_some()
    }

    /// Same scenario with the coherent jammers removed.
    pub fn without_coherent(&self) -> Self {
        let mut out = self.clone();
        out.jammers.retain(|j| j.kind != JammerKind::Coherent);
        out
    }

    pub fn with_training(&self, k: usize, m: usize) -> Self {
        let mut out = self.clone();
        out.k = k;
        out.m = m;
        out
    }

    pub fn target_steering(&self) -> CVector {
        steering_vector(&self.geometry, self.target_aoa_deg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str::<ScenarioConfig>(&text)
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
            .and_then(|cfg| cfg.validate().map(|_| cfg))
    }
}

fn check_aoa(aoa_deg: f64) -> Result<()> {
    if aoa_deg.abs() < 90.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "angle of arrival must lie in (-90, 90) degrees, got {aoa_deg}"
        )))
    }
}

/// Nominal steering vector: entry `k` is `exp(j 2π (d/λ) k sin θ)`.
pub fn steering_vector(geometry: &ArrayGeometry, aoa_deg: f64) -> CVector {
    let phase_step = 2.0 * PI * geometry.spacing_ratio * aoa_deg.to_radians().sin();
    CVector::from_fn(geometry.n_elements, |k, _| {
        Complex64::from_polar(1.0, phase_step * k as f64)
    })
}

/// Steering vectors for a list of angles, one per column.
pub fn steering_matrix(geometry: &ArrayGeometry, angles_deg: &[f64]) -> CMatrix {
    let n = geometry.n_elements;
    let mut v = CMatrix::zeros(n, angles_deg.len());
    for (j, &a) in angles_deg.iter().enumerate() {
        v.set_column(j, &steering_vector(geometry, a));
    }
    v
}

/// The true interference covariances of a scenario.
///
/// `m2 = σ²I + mnj` and `m1 = m2 + CNR·σ²·mc`. Cholesky factors of `m1` and
/// `m2` are kept for sampling.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    pub m1: CMatrix,
    pub m2: CMatrix,
    pub mc: CMatrix,
    pub mnj: CMatrix,
    chol_m1: CMatrix,
    chol_m2: CMatrix,
}

impl CovarianceModel {
    /// Lower Cholesky factor of `m1`.
    pub fn m1_factor(&self) -> &CMatrix {
        &self.chol_m1
    }

    pub fn m2_factor(&self) -> &CMatrix {
        &self.chol_m2
    }
}

pub fn build_covariances(config: &ScenarioConfig) -> Result<CovarianceModel> {
    config.validate()?;
    let n = config.n();
    let sigma2 = config.noise_power;
    let rho = config.clutter_one_lag;

    let mc = CMatrix::from_fn(n, n, |i, j| c(rho.powi(i.abs_diff(j) as i32)));

    let mut mnj = CMatrix::zeros(n, n);
    for jammer in config.noise_like_jammers() {
        let v = steering_vector(&config.geometry, jammer.aoa_deg);
        let power = db_to_linear(jammer.power_db) * sigma2;
        mnj += (&v * v.adjoint()).scale(power);
    }
    linalg::hermitize(&mut mnj);

    let m2 = CMatrix::identity(n, n).scale(sigma2) + &mnj;
    let cnr = db_to_linear(config.cnr_db);
    let m1 = &m2 + mc.scale(cnr * sigma2);

    let chol_m1 = linalg::cholesky(&m1, "M1")?.unpack();
    let chol_m2 = linalg::cholesky(&m2, "M2")?.unpack();
    Ok(CovarianceModel {
        m1,
        m2,
        mc,
        mnj,
        chol_m1,
        chol_m2,
    })
}

/// Hypotheses for the cell under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Noise, clutter and noise-like jammers only.
    H00,
    /// Target present, no coherent jammers.
    H1,
    /// Coherent jammers present, no target.
    H2,
    /// Target and coherent jammers.
    H3,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 4] = [
        Hypothesis::H00,
        Hypothesis::H1,
        Hypothesis::H2,
        Hypothesis::H3,
    ];

    pub fn has_target(self) -> bool {
        matches!(self, Hypothesis::H1 | Hypothesis::H3)
    }

    pub fn has_coherent(self) -> bool {
        matches!(self, Hypothesis::H2 | Hypothesis::H3)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::H00 => "H00",
            Hypothesis::H1 => "H1",
            Hypothesis::H2 => "H2",
            Hypothesis::H3 => "H3",
        }
    }
}

/// One Monte Carlo draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    /// Cell under test.
    pub z: CVector,
    /// Clutter-bearing training set, `N x K`.
    pub zt: CMatrix,
    /// Clutter-free training set, `N x M`.
    pub rt: CMatrix,
    pub true_hypothesis: Hypothesis,
}

/// Draws one data set.
///
/// The random stream is consumed in a fixed order (cell-under-test noise, then
/// `Z`, then `R`, then coherent-jammer phases), so for a fixed seed the noise
/// realisations do not depend on the hypothesis or the target amplitude.
pub fn synthesize(
    config: &ScenarioConfig,
    cov: &CovarianceModel,
    target_amplitude: Complex64,
    hypothesis: Hypothesis,
    seed: u64,
) -> Result<DataSet> {
    if hypothesis.has_coherent() && !config.has_coherent() {
        return Err(Error::HypothesisMismatch {
            hypothesis,
            reason: "hypothesis needs coherent jammers but the scenario has none",
        });
    }
    if !hypothesis.has_coherent() && config.has_coherent() {
        return Err(Error::HypothesisMismatch {
            hypothesis,
            reason: "scenario has coherent jammers but the hypothesis excludes them",
        });
    }
    let n = config.n();
    if cov.m1.nrows() != n {
        return Err(Error::Dimension(format!(
            "covariance is {}x{} but the array has {n} elements",
            cov.m1.nrows(),
            cov.m1.ncols()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = linalg::complex_normal_matrix(&mut rng, n, 1);
    let wz = linalg::complex_normal_matrix(&mut rng, n, config.k);
    let wr = linalg::complex_normal_matrix(&mut rng, n, config.m);

    let mut z: CVector = (cov.m1_factor() * w).column(0).into_owned();
    let zt = cov.m1_factor() * wz;
    let rt = cov.m2_factor() * wr;

    if hypothesis.has_target() {
        z.axpy(target_amplitude, &config.target_steering(), c(1.0));
    }
    if hypothesis.has_coherent() {
        for jammer in config.coherent_jammers() {
            let magnitude = (db_to_linear(jammer.power_db) * config.noise_power).sqrt();
            let phase = if config.coherent_random_phase {
                rng.gen_range(0.0..2.0 * PI)
            } else {
                0.0
            };
            let beta = Complex64::from_polar(magnitude, phase);
            z.axpy(beta, &steering_vector(&config.geometry, jammer.aoa_deg), c(1.0));
        }
    }

    Ok(DataSet {
        z,
        zt,
        rt,
        true_hypothesis: hypothesis,
    })
}

/// Output SINR in dB: `10 log10(|α|² v† M1⁻¹ v)`. Zero amplitude gives `-inf`.
pub fn sinr(target_amplitude: Complex64, cov: &CovarianceModel, v: &CVector) -> Result<f64> {
    Ok(linear_to_db(
        target_amplitude.norm_sqr() * whitened_gain(&cov.m1, v)?,
    ))
}

/// `|α|` that yields the requested SINR.
pub fn amplitude_for_sinr(sinr_db: f64, cov: &CovarianceModel, v: &CVector) -> Result<f64> {
    Ok((db_to_linear(sinr_db) / whitened_gain(&cov.m1, v)?).sqrt())
}

/// `v† M⁻¹ v`.
pub fn whitened_gain(m: &CMatrix, v: &CVector) -> Result<f64> {
    let chol = linalg::cholesky(m, "M1")?;
    let x = chol.solve(v);
    Ok(linalg::inner(v, &x).re)
}
