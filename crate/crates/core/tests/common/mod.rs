#![allow(dead_code)]

use eccm::linalg::{complex_normal_matrix, CMatrix};
use eccm::scenario::{ArrayGeometry, JammerSpec, ScenarioConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> CMatrix {
    complex_normal_matrix(&mut rng(seed), rows, cols)
}

/// Haar-ish unitary from the QR factorisation of a complex normal matrix.
pub fn random_unitary(seed: u64, n: usize) -> CMatrix {
    random_matrix(seed, n, n).qr().q()
}

/// `X X† / cols + I`, Hermitian positive definite.
pub fn random_hpd(seed: u64, n: usize) -> CMatrix {
    let x = random_matrix(seed, n, 2 * n);
    let mut m = &x * x.adjoint() / eccm::linalg::c(2.0 * n as f64);
    for i in 0..n {
        m[(i, i)] += eccm::linalg::c(1.0);
    }
    m
}

/// Three noise-like jammers at 15°, 25°, -10° (30 dB), clutter at 20 dB with
/// one-lag correlation 0.9, 16 elements.
pub fn three_jammer_scene(k: usize, m: usize) -> ScenarioConfig {
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

/// White noise only.
pub fn white_scene(n: usize, k: usize, m: usize) -> ScenarioConfig {
    ScenarioConfig {
        geometry: ArrayGeometry::half_wavelength(n),
        noise_power: 1.0,
        clutter_one_lag: 0.0,
        cnr_db: f64::NEG_INFINITY,
        jammers: vec![],
        target_aoa_deg: 0.0,
        k,
        m,
        coherent_random_phase: false,
    }
}

pub mod oracles;
