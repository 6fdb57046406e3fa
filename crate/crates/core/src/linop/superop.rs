use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::{
    c, ensure_hermitian, identity, kron, matrix_exp, spectral_norm, unvectorize, vectorize,
    ComplexMatrix, I,
};
use crate::error::{Error, Result};

/// Linear map on `n x n` matrices, stored as its `n^2 x n^2` matrix in the
/// row-major elementary basis.
///
/// Composition `a * b` means "apply `b`, then `a`", which is the matrix
/// product of the representations.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n2 = dim * dim;
        if matrix.nrows() != n2 || matrix.ncols() != n2 {
            return Err(Error::Dimension(format!(
                "superoperator on {dim}x{dim} matrices needs a {n2}x{n2} representation, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { dim, matrix })
    }

    pub(crate) fn from_matrix_unchecked(dim: usize, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), dim * dim);
        Self { dim, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(dim, identity(dim * dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_matrix_unchecked(dim, ComplexMatrix::zeros(dim * dim, dim * dim))
    }

    /// `x -> a x`.
    pub fn left_multiplication(a: &ComplexMatrix) -> Self {
        let n = a.nrows();
        Self::from_matrix_unchecked(n, kron(a, &identity(n)))
    }

    /// `x -> x b`.
    pub fn right_multiplication(b: &ComplexMatrix) -> Self {
        let n = b.nrows();
        Self::from_matrix_unchecked(n, kron(&identity(n), &b.transpose()))
    }

    /// `x -> a x b`.
    pub fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        let n = a.nrows();
        Self::from_matrix_unchecked(n, kron(a, &b.transpose()))
    }

    /// `x -> u x u^+`.
    pub fn conjugation(u: &ComplexMatrix) -> Self {
        Self::sandwich(u, &u.adjoint())
    }

    /// `x -> [a, x]`.
    pub fn commutator(a: &ComplexMatrix) -> Self {
        let n = a.nrows();
        Self::from_matrix_unchecked(
            n,
            kron(a, &identity(n)) - kron(&identity(n), &a.transpose()),
        )
    }

    /// Heisenberg derivation `x -> -i[h, x] = i[x, h]` of a Hermitian `h`.
    ///
    /// `exp(t * derivation(h))` is `x -> e^{-ith} x e^{ith}`; for
    /// `h = diag(0, S)` it maps `u_01` to `e^{itS} u_01`.
    pub fn derivation(h: &ComplexMatrix) -> Result<Self> {
        ensure_hermitian(h, "derivation Hamiltonian")?;
        Ok(Self::commutator(h).scale(-I))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Matrix element `<u_kl | S | u_mn>`.
    pub fn element(&self, (k, l): (usize, usize), (m, n): (usize, usize)) -> Complex64 {
        self.matrix[(k * self.dim + l, m * self.dim + n)]
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.nrows(), self.dim, "operand dimension");
        unvectorize(&(&self.matrix * vectorize(x)), self.dim)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        assert_eq!(
            self.dim, other.dim,
            "composition of superoperators on different spaces"
        );
        Self::from_matrix_unchecked(self.dim, &self.matrix * &other.matrix)
    }

    pub fn scale(&self, z: Complex64) -> Superoperator {
        Self::from_matrix_unchecked(self.dim, &self.matrix * z)
    }

    pub fn exp(&self) -> Result<Superoperator> {
        Ok(Self::from_matrix_unchecked(
            self.dim,
            matrix_exp(&self.matrix)?,
        ))
    }

    /// `exp(t * self)`.
    pub fn exp_scaled(&self, t: f64) -> Result<Superoperator> {
        Ok(Self::from_matrix_unchecked(
            self.dim,
            matrix_exp(&(&self.matrix * c(t)))?,
        ))
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut m: u64) -> Superoperator {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        while m > 0 {
            if m & 1 == 1 {
                result = result.compose(&base);
            }
            m >>= 1;
            if m > 0 {
                base = base.compose(&base);
            }
        }
        result
    }

    /// Schrödinger-picture dual: `Tr(dual(rho) x) = Tr(rho self(x))`.
    pub fn dual(&self) -> Superoperator {
        let n = self.dim;
        let m = ComplexMatrix::from_fn(n * n, n * n, |row, col| {
            let (a, b) = (row / n, row % n);
            let (s, r) = (col / n, col % n);
            self.matrix[(r * n + s, b * n + a)]
        });
        Self::from_matrix_unchecked(n, m)
    }

    /// Hilbert-Schmidt adjoint (conjugate transpose of the representation).
    pub fn hs_adjoint(&self) -> Superoperator {
        Self::from_matrix_unchecked(self.dim, self.matrix.adjoint())
    }

    pub fn norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }

    /// `[self, other] = self∘other - other∘self`.
    pub fn commutator_with(&self, other: &Superoperator) -> Superoperator {
        self.compose(other) - other.compose(self)
    }
}

/// Operator norm induced by the Hilbert-Schmidt norm: the largest singular
/// value of the representation. Equals 1 on the identity and on unitary
/// conjugations.
pub fn superop_norm(s: &Superoperator) -> f64 {
    s.norm()
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, rhs.dim);
        Superoperator::from_matrix_unchecked(self.dim, &self.matrix + &rhs.matrix)
    }
}

impl Add for Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: Superoperator) -> Superoperator {
        &self + &rhs
    }
}

impl Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, rhs.dim);
        Superoperator::from_matrix_unchecked(self.dim, &self.matrix - &rhs.matrix)
    }
}

impl Sub for Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: Superoperator) -> Superoperator {
        &self - &rhs
    }
}

impl Neg for &Superoperator {
    type Output = Superoperator;
    fn neg(self) -> Superoperator {
        Superoperator::from_matrix_unchecked(self.dim, -&self.matrix)
    }
}

impl Mul for &Superoperator {
    type Output = Superoperator;
    fn mul(self, rhs: &Superoperator) -> Superoperator {
        self.compose(rhs)
    }
}

impl Mul for Superoperator {
    type Output = Superoperator;
    fn mul(self, rhs: Superoperator) -> Superoperator {
        self.compose(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{diag, elementary, max_abs, trace};
    use super::*;

    fn sample(n: usize, seed: u64) -> ComplexMatrix {
        let mut state = seed;
        ComplexMatrix::from_fn(n, n, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let re = ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let im = ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
            Complex64::new(re, im)
        })
    }

    #[test]
    fn sandwich_matches_direct_product() {
        let a = sample(3, 1);
        let b = sample(3, 2);
        let x = sample(3, 3);
        let direct = &a * &x * &b;
        let via = Superoperator::sandwich(&a, &b).apply(&x);
        assert!(max_abs(&(direct - via)) < 1e-14);
    }

    #[test]
    fn derivation_matches_free_evolution_convention() {
        let s = 1.3;
        let t = 0.7;
        let d = Superoperator::derivation(&diag(&[0.0, s])).unwrap();
        let evolved = d.exp_scaled(t).unwrap().apply(&elementary(2, 0, 1));
        let expected = elementary(2, 0, 1) * Complex64::new(0.0, t * s).exp();
        assert!(max_abs(&(evolved - expected)) < 1e-14);
        // u_00 and u_11 are fixed
        let u11 = d.apply(&elementary(2, 1, 1));
        assert!(max_abs(&u11) < 1e-15);
    }

    #[test]
    fn derivation_zero_and_identity() {
        let d0 = Superoperator::derivation(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(d0, Superoperator::zero(3));
        let h = sample(3, 9);
        let h = (&h + h.adjoint()) * c(0.5);
        let d = Superoperator::derivation(&h).unwrap();
        assert!(max_abs(&d.apply(&identity(3))) < 1e-15);
        assert!(max_abs(&(d.matrix() + d.matrix().adjoint())) < 1e-15);
    }

    #[test]
    fn derivation_rejects_non_hermitian() {
        assert!(matches!(
            Superoperator::derivation(&elementary(2, 0, 1)),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn dual_satisfies_trace_pairing() {
        let s = Superoperator::from_matrix(3, sample(9, 4)).unwrap();
        let rho = sample(3, 5);
        let x = sample(3, 6);
        let lhs = trace(&(s.dual().apply(&rho) * &x));
        let rhs = trace(&(&rho * s.apply(&x)));
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn pow_matches_repeated_composition() {
        let s = Superoperator::from_matrix(2, sample(4, 7) * c(0.5)).unwrap();
        let mut direct = Superoperator::identity(2);
        for _ in 0..13 {
            direct = direct.compose(&s);
        }
        assert!(max_abs(&(direct.matrix() - s.pow(13).matrix())) < 1e-13);
        assert_eq!(s.pow(0), Superoperator::identity(2));
    }

    #[test]
    fn norms_of_simple_maps() {
        assert!((superop_norm(&Superoperator::identity(3)) - 1.0).abs() < 1e-14);
        assert!((superop_norm(&Superoperator::identity(3).scale(c(2.0))) - 2.0).abs() < 1e-14);
        let h = diag(&[0.0, 0.4, 1.1]);
        let u = Superoperator::derivation(&h).unwrap().exp().unwrap();
        let cnj = Superoperator::conjugation(&crate::linop::matrix_exp(&(h * I)).unwrap());
        assert!((superop_norm(&u) - 1.0).abs() < 1e-13);
        assert!((superop_norm(&cnj) - 1.0).abs() < 1e-13);
    }
}
