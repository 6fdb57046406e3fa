use super::{hermitian_asymmetry, hermitian_eigenvalues, ComplexMatrix, Superoperator};

/// Choi matrix `C = sum_kl u_kl (x) S(u_kl)`, i.e.
/// `C[(k,a),(l,b)] = S(u_kl)[a,b]`.
pub fn choi_matrix(s: &Superoperator) -> ComplexMatrix {
    let n = s.dim();
    let m = s.matrix();
    ComplexMatrix::from_fn(n * n, n * n, |row, col| {
        let (k, a) = (row / n, row % n);
        let (l, b) = (col / n, col % n);
        m[(a * n + b, k * n + l)]
    })
}

#[derive(Clone, Copy, Debug)]
pub struct CpCheck {
    pub min_eigenvalue: f64,
    /// Deviation of the Choi matrix from Hermiticity; nonzero means the map
    /// does not preserve adjoints.
    pub asymmetry: f64,
    pub is_cp: bool,
}

/// Complete positivity through the smallest Choi eigenvalue, accepted when
/// `>= -tol` and the Choi matrix is Hermitian to `tol`.
pub fn complete_positivity(s: &Superoperator, tol: f64) -> CpCheck {
    let choi = choi_matrix(s);
    let asymmetry = hermitian_asymmetry(&choi);
    let min_eigenvalue = hermitian_eigenvalues(&choi).first().cloned().unwrap_or(0.0);
    CpCheck {
        min_eigenvalue,
        asymmetry,
        is_cp: min_eigenvalue >= -tol && asymmetry <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{c, identity, trace};
    use super::*;

    #[test]
    fn identity_map_choi_is_rank_one() {
        let ch = choi_matrix(&Superoperator::identity(3));
        assert!((trace(&ch) - c(3.0)).norm() < 1e-14);
        let ev = hermitian_eigenvalues(&ch);
        assert!((ev[8] - 3.0).abs() < 1e-12);
        assert!(ev[..8].iter().all(|x| x.abs() < 1e-12));
        assert!(complete_positivity(&Superoperator::identity(3), 1e-12).is_cp);
    }

    #[test]
    fn transpose_is_not_cp() {
        let n = 2;
        let t = ComplexMatrix::from_fn(4, 4, |row, col| {
            if row == (col % n) * n + col / n {
                c(1.0)
            } else {
                c(0.0)
            }
        });
        let check = complete_positivity(&Superoperator::from_matrix(2, t).unwrap(), 1e-12);
        assert!((check.min_eigenvalue + 1.0).abs() < 1e-12);
        assert!(!check.is_cp);
    }

    #[test]
    fn conjugation_is_cp() {
        let u = ComplexMatrix::from_row_slice(2, 2, &[c(0.6), c(0.8), c(-0.8), c(0.6)]);
        let check = complete_positivity(&Superoperator::conjugation(&u), 1e-12);
        assert!(check.is_cp);
        let _ = identity(1);
    }
}
