mod common;

use eccm::covariance::estimate_m2;
use eccm::linalg::{c, gaussian_log_likelihood, gram, CMatrix};
use eccm::rank_select::*;
use eccm::scenario::{build_covariances, synthesize, Hypothesis};
use proptest::prelude::*;

use common::oracles::largest_gap_index;
use common::{random_matrix, random_unitary, three_jammer_scene, white_scene};

/// Random training data with a few strong directions so ranks are distinguishable.
fn structured_data(seed: u64, n: usize, m: usize, strong: usize) -> CMatrix {
    let mut r = random_matrix(seed, n, m);
    for i in 0..strong.min(n) {
        for j in 0..m {
            r[(i, j)] *= c(10.0 / (i + 1) as f64);
        }
    }
    random_unitary(seed ^ 0x5555, n) * r
}

fn rank_rate(cfg: &eccm::scenario::ScenarioConfig, trials: u64, f: impl Fn(&CMatrix) -> usize) -> Vec<usize> {
    let cov = build_covariances(cfg).unwrap();
    (0..trials)
        .map(|seed| f(&synthesize(cfg, &cov, c(0.0), Hypothesis::H00, seed).unwrap().rt))
        .collect()
}

#[test]
fn white_noise_bic_selects_zero() {
    let ranks = rank_rate(&white_scene(16, 1, 20), 500, |rt| mos_select(rt, MosRule::Bic, 8).unwrap().r_hat);
    let zeros = ranks.iter().filter(|&&r| r == 0).count();
    assert!(zeros as f64 >= 0.95 * 500.0, "r̂=0 in {zeros}/500");
}

#[test]
fn three_jammers_bic_selects_three() {
    let ranks = rank_rate(&three_jammer_scene(20, 20), 500, |rt| mos_select(rt, MosRule::Bic, 8).unwrap().r_hat);
    let hits = ranks.iter().filter(|&&r| r == 3).count();
    assert!(hits as f64 >= 0.95 * 500.0, "r̂=3 in {hits}/500");
}

#[test]
fn gic_with_rho_two_uses_nu_three() {
    let rt = structured_data(4, 8, 30, 2);
    let est = mos_select(&rt, MosRule::Gic { rho: 2.0 }, 4).unwrap();
    let n = 8;
    for (r, s) in est.scores.iter().enumerate() {
        let ll = compressed_loglik(&rt, r).unwrap();
        let expected = -2.0 * ll + (r * (2 * n - r) + 1) as f64 * 3.0;
        assert!((s - expected).abs() <= 1e-9 * expected.abs());
    }
}

#[test]
fn flat_spectrum_selects_zero_for_every_rule() {
    // Every rank fits equally well, so the penalty decides.
    let eigs = [40.0, 40.0, 40.0, 40.0];
    for rule in [MosRule::Aic, MosRule::Bic, MosRule::Gic { rho: 2.0 }] {
        assert_eq!(mos_select_from_eigs(&eigs, 10, rule, 3).unwrap().r_hat, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loglik_is_nondecreasing_in_rank(seed in any::<u64>(), n in 2usize..10, extra in 1usize..20, strong in 0usize..4) {
        let rt = structured_data(seed, n, n + extra, strong);
        let mut prev = f64::NEG_INFINITY;
        for r in 0..n {
            let ll = compressed_loglik(&rt, r).unwrap();
            prop_assert!(ll >= prev - 1e-9 * ll.abs());
            prev = ll;
        }
    }

    #[test]
    fn loglik_matches_likelihood_at_m2_estimate(seed in any::<u64>(), n in 2usize..8, extra in 1usize..15, strong in 0usize..3) {
        let m = n + extra;
        let rt = structured_data(seed, n, m, strong);
        let g = gram(&rt);
        for r in 0..n {
            let est = estimate_m2(&rt, r).unwrap();
            let direct = gaussian_log_likelihood(&g, m, &est.matrix).unwrap();
            let compressed = compressed_loglik(&rt, r).unwrap();
            prop_assert!((direct - compressed).abs() <= 1e-8 * direct.abs().max(1.0),
                "r={} direct {} compressed {}", r, direct, compressed);
        }
    }

    #[test]
    fn selection_invariant_under_rotation_and_permutation(seed in any::<u64>(), n in 3usize..10, extra in 1usize..15, strong in 0usize..3, shift in 1usize..7) {
        let m = n + extra;
        let rt = structured_data(seed, n, m, strong);
        let q = random_unitary(seed.wrapping_add(17), n);
        let rotated = &q * &rt;
        let permuted = CMatrix::from_fn(n, m, |i, j| rt[(i, (j + shift) % m)]);
        let n_max = n / 2;
        for rule in [MosRule::Aic, MosRule::Bic, MosRule::Gic { rho: 2.0 }] {
            let base = mos_select(&rt, rule, n_max).unwrap().r_hat;
            prop_assert_eq!(mos_select(&rotated, rule, n_max).unwrap().r_hat, base);
            prop_assert_eq!(mos_select(&permuted, rule, n_max).unwrap().r_hat, base);
        }
    }

    #[test]
    fn aic_never_selects_fewer_than_bic(seed in any::<u64>(), n in 3usize..10, m in 8usize..40, strong in 0usize..4) {
        // ln M > 2 needs M ≥ 8.
        let rt = structured_data(seed, n, m.max(n + 1), strong);
        let n_max = n - 1;
        let aic = mos_select(&rt, MosRule::Aic, n_max).unwrap().r_hat;
        let bic = mos_select(&rt, MosRule::Bic, n_max).unwrap().r_hat;
        prop_assert!(aic >= bic, "aic {} bic {}", aic, bic);
    }

    #[test]
    fn gap_rule_matches_exhaustive_scan(raw in prop::collection::vec(0.0f64..1000.0, 2..20), threshold in 1.0f64..300.0) {
        let mut eigs = raw;
        eigs.sort_by(|a, b| b.total_cmp(a));
        let est = eig_gap_select_from_scaled(&eigs, threshold).unwrap();
        prop_assert_eq!(est.r_hat, largest_gap_index(&eigs, threshold));
    }

    #[test]
    fn gap_rule_on_data_uses_scaled_gram_eigenvalues(seed in any::<u64>(), n in 2usize..8, extra in 1usize..10) {
        let m = n + extra;
        let rt = structured_data(seed, n, m, 2);
        let eig = eccm::linalg::EigenSystem::of_hermitian(&gram(&rt));
        let scaled: Vec<f64> = eig.values.iter().map(|g| g / m as f64).collect();
        let est = eig_gap_select(&rt, 10.0).unwrap();
        prop_assert_eq!(est.r_hat, largest_gap_index(&scaled, 10.0));
    }
}
