//! Sparse learning via iterative minimisation (SLIM) and BIC-driven choice of
//! the sparsity parameter `q` and of the number of peaks.

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlimOptions {
    /// Relative-change stopping tolerance.
    pub delta: f64,
    pub max_iter: usize,
}

impl Default for SlimOptions {
    fn default() -> Self {
        SlimOptions {
            delta: 1e-3,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlimRun {
    pub alpha: CVector,
    pub iterations: usize,
    pub converged: bool,
}

/// `g_q(α) = ‖y - Aα‖² + Σ (2/q)(|α_i|^q - 1)`.
pub fn objective_g(alpha: &CVector, a: &CMatrix, y: &CVector, q: f64) -> f64 {
    let residual = y - a * alpha;
    let prior: f64 = alpha
        .iter()
        .map(|v| (2.0 / q) * (v.norm().powf(q) - 1.0))
        .sum();
    linalg::norm_sqr(&residual) + prior
}

/// Per-angle matched estimates `a_i† y / ‖a_i‖²`.
pub fn initial_estimate(a: &CMatrix, y: &CVector) -> CVector {
    CVector::from_fn(a.ncols(), |i, _| {
        let col = a.column(i);
        let num = col.dotc(y);
        let den: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        if den > 0.0 {
            num / den
        } else {
            c(0.0)
        }
    })
}

/// Runs SLIM from the matched initial estimate.
pub fn slim_iterate(a: &CMatrix, y: &CVector, q: f64, opts: &SlimOptions) -> Result<SlimRun> {
    slim_iterate_traced(a, y, q, opts, |_, _| {})
}

/// [`slim_iterate`] calling `on_step(m, α^(m))` for the initial estimate
/// (`m = 0`) and after every update.
pub fn slim_iterate_traced(
    a: &CMatrix,
    y: &CVector,
    q: f64,
    opts: &SlimOptions,
    mut on_step: impl FnMut(usize, &CVector),
) -> Result<SlimRun> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidConfig(format!("q must lie in (0, 1], got {q}")));
    }
    if !(opts.delta > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidConfig(
            "SLIM needs delta > 0 and max_iter >= 1".into(),
        ));
    }
    if a.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "model matrix has {} rows, data has {} entries",
            a.nrows(),
            y.len()
        )));
    }
    let l = a.ncols();
    let exponent = 2.0 - q;

    let mut alpha = initial_estimate(a, y);
    on_step(0, &alpha);
    let mut p = vec![0.0; l];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        for (pi, ai) in p.iter_mut().zip(alpha.iter()) {
            *pi = ai.norm().powf(exponent);
        }
        let g = weighted_gram(a, &p);
        let x = match Cholesky::new(g) {
            Some(chol) => chol.solve(y),
            None => return Err(Error::NonFinite { iteration: iterations }),
        };
        let next = CVector::from_fn(l, |i, _| {
            let v = a.column(i).dotc(&x) * p[i];
            if p[i] == 0.0 || v.norm() < FLUSH {
                c(0.0)
            } else {
                v
            }
        });
        if next.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite { iteration: iterations });
        }
        let change = linalg::norm_sqr(&(&next - &alpha)).sqrt();
        let size = linalg::norm_sqr(&next).sqrt();
        alpha = next;
        on_step(iterations, &alpha);
        if size == 0.0 || change / size < opts.delta {
            converged = true;
            break;
        }
    }
    Ok(SlimRun {
        alpha,
        iterations,
        converged,
    })
}

/// Magnitudes below this are set to exactly zero. Entries heading to zero
/// shrink superlinearly for `q < 1` and would otherwise pass through
/// denormals, where `|α|^{2-q}` underflows.
const FLUSH: f64 = 1e-150;

/// `I + Σ_l p_l a_l a_l†`, exactly Hermitian.
fn weighted_gram(a: &CMatrix, p: &[f64]) -> CMatrix {
    let n = a.nrows();
    let mut g = CMatrix::identity(n, n);
    let data = a.as_slice();
    for (l, &pl) in p.iter().enumerate() {
        if pl == 0.0 {
            continue;
        }
        let col = &data[l * n..(l + 1) * n];
        for j in 0..n {
            let cj = col[j].conj() * pl;
            for i in j..n {
                g[(i, j)] += col[i] * cj;
            }
        }
    }
    for j in 0..n {
        g[(j, j)] = c(g[(j, j)].re);
        for i in (j + 1)..n {
            g[(j, i)] = g[(i, j)].conj();
        }
    }
    g
}

/// Criterion score for one value of `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QScore {
    pub q: f64,
    pub bic: f64,
    pub peaks: usize,
}

#[derive(Debug, Clone)]
pub struct SparseEstimate {
    /// Refitted amplitudes, exactly zero outside `support`.
    pub alpha: CVector,
    /// Grid indices of the selected peaks, ascending.
    pub support: Vec<usize>,
    pub q_hat: f64,
    pub bic_by_q: Vec<QScore>,
    /// SLIM iterations spent for `q_hat`.
    pub iterations: usize,
}

/// Default grid `{0.1, 0.2, …, 1.0}`.
pub fn default_q_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

/// Least-squares amplitudes on the columns `support`; `None` when the
/// normal equations are singular.
pub fn refit(a: &CMatrix, y: &CVector, support: &[usize]) -> Option<CVector> {
    if support.is_empty() {
        return Some(CVector::zeros(0));
    }
    let sub = a.select_columns(support);
    let normal = sub.adjoint() * &sub;
    let rhs = sub.adjoint() * y;
    let chol = Cholesky::new(normal)?;
    let beta = chol.solve(&rhs);
    beta.iter()
        .all(|v| v.re.is_finite() && v.im.is_finite())
        .then_some(beta)
}

/// For each `q` in the grid: run SLIM, rank the entries by magnitude, refit
/// the top-`h` support by least squares for `h = 0..=h_max` and keep the `h`
/// with the lowest `2‖y - Aα‖² + 3h log(2N)`. Returns the estimate for the
/// `q` with the lowest score. Ties keep the earlier `q` and the smaller `h`.
pub fn select_q(
    a: &CMatrix,
    y: &CVector,
    q_grid: &[f64],
    h_max: usize,
    opts: &SlimOptions,
) -> Result<SparseEstimate> {
    if q_grid.is_empty() {
        return Err(Error::InvalidConfig("q grid is empty".into()));
    }
    let n = a.nrows();
    let l = a.ncols();
    let penalty = 3.0 * (2.0 * n as f64).ln();

    let mut best: Option<(f64, CVector, Vec<usize>, f64, usize)> = None;
    let mut bic_by_q = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let run = slim_iterate(a, y, q, opts)?;
        let mut order: Vec<usize> = (0..l).filter(|&i| run.alpha[i].norm() > 0.0).collect();
        order.sort_by(|&i, &j| run.alpha[j].norm().total_cmp(&run.alpha[i].norm()));

        let mut q_best = (2.0 * linalg::norm_sqr(y), 0usize, CVector::zeros(0));
        for h in 1..=h_max.min(order.len()) {
            let Some(beta) = refit(a, y, &order[..h]) else {
                continue;
            };
            let sub = a.select_columns(&order[..h]);
            let residual = y - sub * &beta;
            let bic = 2.0 * linalg::norm_sqr(&residual) + penalty * h as f64;
            if bic < q_best.0 {
                q_best = (bic, h, beta);
            }
        }
        let (bic, h, beta) = q_best;
        bic_by_q.push(QScore { q, bic, peaks: h });

        if best.as_ref().map_or(true, |b| bic < b.0) {
            let mut alpha = CVector::zeros(l);
            let mut support: Vec<usize> = order[..h].to_vec();
            for (k, &idx) in support.iter().enumerate() {
                alpha[idx] = beta[k];
            }
            support.sort_unstable();
            best = Some((bic, alpha, support, q, run.iterations));
        }
    }
    let (_, alpha, support, q_hat, iterations) = best.expect("grid is non-empty");
    Ok(SparseEstimate {
        alpha,
        support,
        q_hat,
        bic_by_q,
        iterations,
    })
}

/// `‖A†Aα - A†y + P_q⁻¹α‖` over entries with `|α_i|` above `floor · max|α|`.
pub fn stationarity_residual(a: &CMatrix, y: &CVector, alpha: &CVector, q: f64, floor: f64) -> f64 {
    let max = alpha.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let grad = a.adjoint() * (a * alpha - y);
    alpha
        .iter()
        .zip(grad.iter())
        .filter(|(v, _)| v.norm() > floor * max && max > 0.0)
        .map(|(v, g)| {
            let prior: Complex64 = *v / v.norm().powf(2.0 - q);
            (g + prior).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}
