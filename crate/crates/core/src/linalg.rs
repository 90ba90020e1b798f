//! Small complex linear-algebra layer over `nalgebra`.
//!
//! Everything here works on dynamically sized `Complex64` matrices. The
//! Hermitian eigensolver returns eigenvalues sorted in descending order, which
//! is the convention every estimator in this crate relies on. It runs on
//! `faer`: nalgebra's complex `SymmetricEigen` loses about three digits on
//! some small Gram matrices.

use faer::{Mat, Side};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative eigenvalue floor below which a Hermitian matrix is treated as
/// singular when checking definiteness.
pub const PSD_FLOOR: f64 = 1e-12;

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in descending
/// order and the matching eigenvectors stored column-wise.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    /// Decomposes `m`, which must be square. Only the Hermitian part
    /// `(m + m†)/2` is used.
    pub fn of_hermitian(m: &CMatrix) -> Self {
        assert!(m.is_square(), "eigendecomposition needs a square matrix");
        let n = m.nrows();
        let sym = Mat::<faer::c64>::from_fn(n, n, |i, j| {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            faer::c64::new(z.re, z.im)
        });
        let eig = sym
            .self_adjoint_eigen(Side::Lower)
            .expect("Hermitian eigendecomposition did not converge");
        let (s, u) = (eig.S(), eig.U());
        // faer sorts ascending.
        let values = (0..n).rev().map(|i| s[i].re).collect();
        let vectors = CMatrix::from_fn(n, n, |r, col| {
            let z = u[(r, n - 1 - col)];
            Complex64::new(z.re, z.im)
        });
        EigenSystem { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Rebuilds `U diag(f(λ)) U†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        reconstruct(&self.vectors, &d)
    }

    pub fn is_positive_definite(&self) -> bool {
        let top = self.values.first().copied().unwrap_or(0.0);
        top > 0.0 && self.values.iter().all(|&v| v > PSD_FLOOR * top)
    }
}

/// `U diag(d) U†` for real `d`.
pub fn reconstruct(u: &CMatrix, d: &[f64]) -> CMatrix {
    let n = u.nrows();
    let mut scaled = u.clone();
    for (j, &dj) in d.iter().enumerate() {
        scaled.column_mut(j).scale_mut(dj);
    }
    let mut out = &scaled * u.adjoint();
    hermitize(&mut out);
    debug_assert_eq!(out.nrows(), n);
    out
}

/// Forces exact Hermitian symmetry by averaging with the adjoint.
pub fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = c(m[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// `X X†`, exactly Hermitian.
pub fn gram(x: &CMatrix) -> CMatrix {
    let mut g = x * x.adjoint();
    hermitize(&mut g);
    g
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Cholesky factorisation of a Hermitian positive-definite matrix.
pub fn cholesky(m: &CMatrix, what: &'static str) -> Result<Cholesky<Complex64, Dyn>> {
    Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite { what })
}

/// `x† y`.
#[inline]
pub fn inner(x: &CVector, y: &CVector) -> Complex64 {
    x.dotc(y)
}

/// Squared Euclidean norm.
#[inline]
pub fn norm_sqr(x: &CVector) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

/// One circular complex normal sample with unit variance.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows x cols` matrix of i.i.d. CN(0, 1) entries, filled column by column.
pub fn complex_normal_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    CMatrix::from_vec(rows, cols, data)
}

/// Log-density of `n_samples` i.i.d. CN(0, cov) columns whose Gram matrix is
/// `gram`: `-n N ln π - n ln det(cov) - tr(cov⁻¹ gram)`.
pub fn gaussian_log_likelihood(gram: &CMatrix, n_samples: usize, cov: &CMatrix) -> Result<f64> {
    let n = cov.nrows();
    let chol = cholesky(cov, "covariance")?;
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.re.ln()).sum::<f64>();
    let solved = chol.solve(gram);
    let tr = trace_re(&solved);
    let ns = n_samples as f64;
    Ok(-ns * n as f64 * std::f64::consts::PI.ln() - ns * log_det - tr)
}

/// Relative Frobenius distance `‖a - b‖ / ‖b‖`.
pub fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}
