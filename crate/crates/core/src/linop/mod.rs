//! Dense complex linear algebra and superoperator calculus.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. A [`Superoperator`] acting on
//! `n x n` matrices is stored as an `n^2 x n^2` matrix in the basis of
//! elementary matrices `u_kl = |k><l|`, ordered lexicographically by `(k, l)`
//! (row-major vectorization).

mod choi;
mod expm;
mod spectral;
mod superop;

pub use choi::{choi_matrix, complete_positivity, CpCheck};
pub use expm::matrix_exp;
pub use spectral::{
    eigenprojection, eigenvalues, largest_gap_bisector, matrix_log_unitary, spectral_decompose,
    Normality, SpectralCluster, SpectralDecomposition, DEFAULT_CLUSTER_TOL,
};
pub use superop::{superop_norm, Superoperator};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Diagonal matrix with real entries.
pub fn diag(entries: &[f64]) -> ComplexMatrix {
    let n = entries.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(entries[i]) } else { c(0.0) })
}

/// Elementary matrix `u_kl = |k><l|` of size `n`.
pub fn elementary(n: usize, k: usize, l: usize) -> ComplexMatrix {
    let mut m = zeros(n, n);
    m[(k, l)] = c(1.0);
    m
}

/// Kronecker product; `kron(a, b)[(i*p + k, j*q + l)] = a[(i, j)] * b[(k, l)]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_finite(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `max_{jk} |a_jk - conj(a_kj)|`.
pub fn hermitian_asymmetry(a: &ComplexMatrix) -> f64 {
    if a.nrows() != a.ncols() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in j..n {
            worst = worst.max((a[(j, k)] - a[(k, j)].conj()).norm());
        }
    }
    worst
}

/// Validates Hermiticity to `1e-12` relative to the largest entry.
pub fn ensure_hermitian(a: &ComplexMatrix, what: &str) -> Result<()> {
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    let asymmetry = hermitian_asymmetry(a);
    if asymmetry > 1e-12 * max_abs(a).max(1.0) {
        return Err(Error::NotHermitian {
            what: what.to_string(),
            asymmetry,
        });
    }
    Ok(())
}

/// Largest singular value, from the top eigenvalue of `a^+ a`.
///
/// nalgebra's complex SVD loses accuracy on some structured inputs, so
/// singular data is always taken from the Hermitian eigensolver.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = if a.nrows() < a.ncols() {
        a * a.adjoint()
    } else {
        a.adjoint() * a
    };
    gram.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
        .max(0.0)
        .sqrt()
}

/// Orthonormal columns spanning the `k` least-amplified directions of `a`
/// (the right singular vectors of its `k` smallest singular values), with the
/// largest residual `||a v||` among them.
pub fn smallest_singular_vectors(a: &ComplexMatrix, k: usize) -> (ComplexMatrix, f64) {
    let n = a.ncols();
    let eig = (a.adjoint() * a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let v = ComplexMatrix::from_fn(n, k, |r, j| eig.eigenvectors[(r, order[j])]);
    let image = a * &v;
    let residual = (0..k).map(|j| image.column(j).norm()).fold(0.0, f64::max);
    (v, residual)
}

/// Frobenius (Hilbert-Schmidt) norm.
pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Row-major vectorization: `vec(x)[k*n + l] = x[(k, l)]`.
pub fn vectorize(x: &ComplexMatrix) -> nalgebra::DVector<Complex64> {
    let (r, cols) = x.shape();
    nalgebra::DVector::from_fn(r * cols, |idx, _| x[(idx / cols, idx % cols)])
}

/// Inverse of [`vectorize`] for a square `n x n` matrix.
pub fn unvectorize(v: &nalgebra::DVector<Complex64>, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |k, l| v[k * n + l])
}

/// Hermitian part `(a + a^+)/2`.
pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()) * c(0.5)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(a)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Trace distance `(1/2) ||rho - sigma||_1` between two Hermitian matrices.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(rho - sigma))
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
}
