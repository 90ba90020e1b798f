//! Brute-force references used by several test targets.

use std::f64::consts::PI;

use eccm::linalg::{c, gaussian_log_likelihood, CMatrix};
use num_complex::Complex64;

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn unit(phi: f64, psi: f64) -> [Complex64; 2] {
    [c(phi.cos()), Complex64::from_polar(phi.sin(), psi)]
}

fn rank_one_plus_identity(sigma2: f64, lambda: f64, u: [Complex64; 2]) -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| {
        let base = if i == j { c(sigma2) } else { c(0.0) };
        base + u[i] * u[j].conj() * lambda
    })
}

/// Largest log-likelihood of `samples` columns with Gram matrix `gram` over a
/// grid of 2x2 covariances `σ²I + λ u u†` (`u` unit, complex).
pub fn best_rank_one_loglik(gram: &CMatrix, samples: usize, steps: usize) -> f64 {
    let scale = gram.trace().re / (2.0 * samples as f64);
    let mut best = f64::NEG_INFINITY;
    for s in linspace(-2.0, 1.0, steps) {
        let sigma2 = scale * 10f64.powf(s);
        for l in linspace(-3.0, 1.5, steps) {
            let lambda = scale * 10f64.powf(l);
            for phi in linspace(0.0, PI / 2.0, steps) {
                for psi in linspace(0.0, 2.0 * PI, steps) {
                    let cov = rank_one_plus_identity(sigma2, lambda, unit(phi, psi));
                    if let Ok(ll) = gaussian_log_likelihood(gram, samples, &cov) {
                        best = best.max(ll);
                    }
                }
            }
        }
    }
    best
}

/// Largest log-likelihood over a grid of 2x2 PSD clutter matrices added to
/// `m2`: `[[a, b e^{jψ}], [b e^{-jψ}, d]]` with `b ≤ sqrt(ad)`.
pub fn best_clutter_loglik(gram: &CMatrix, samples: usize, m2: &CMatrix, max_power: f64, steps: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for a in linspace(0.0, max_power, steps) {
        for d in linspace(0.0, max_power, steps) {
            let bmax = (a * d).sqrt();
            for t in linspace(0.0, 1.0, steps) {
                for psi in linspace(0.0, 2.0 * PI, steps) {
                    let off = Complex64::from_polar(t * bmax, psi);
                    let mc = CMatrix::from_row_slice(2, 2, &[c(a), off, off.conj(), c(d)]);
                    if let Ok(ll) = gaussian_log_likelihood(gram, samples, &(m2 + mc)) {
                        best = best.max(ll);
                    }
                }
            }
        }
    }
    best
}

/// Largest `i` in `1..len` with `eigs[i-1] - eigs[i] > threshold`, found by
/// checking every index; 0 if none.
pub fn largest_gap_index(eigs: &[f64], threshold: f64) -> usize {
    let mut found = 0;
    for i in 1..eigs.len() {
        if eigs[i - 1] - eigs[i] > threshold {
            found = i;
        }
    }
    found
}

/// Kolmogorov–Smirnov distance between a sample and the unit exponential.
pub fn ks_unit_exponential(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-x).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Minimiser of `|y - a|² + (2/q)|a|^q` over real `a ≥ 0` by dense search
/// (for real positive `y` the minimiser is real and non-negative).
pub fn scalar_slim_minimiser(y: f64, q: f64) -> f64 {
    let g = |a: f64| (y - a).powi(2) + (2.0 / q) * a.powf(q);
    let mut best = (0.0, g(0.0));
    let steps = 2_000_000;
    for i in 1..=steps {
        let a = y * i as f64 / steps as f64;
        let v = g(a);
        if v < best.1 {
            best = (a, v);
        }
    }
    best.0
}

/// `f(H)` for Hermitian `H` through the real symmetric embedding
/// `[[Re H, -Im H], [Im H, Re H]]`, which commutes with spectral functions.
/// Independent of the crate's complex eigensolver.
pub fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = h.nrows();
    let real = nalgebra::DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = nalgebra::SymmetricEigen::new(real);
    let d = nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(&f));
    let out = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    CMatrix::from_fn(n, n, |i, j| Complex64::new(out[(i, j)], out[(i + n, j)]))
}
