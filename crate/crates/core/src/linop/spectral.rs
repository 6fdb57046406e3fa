//! Eigenvalues, clustered spectral projections and the unitary logarithm.
//!
//! Normal inputs are decomposed through their Schur form, whose vectors are
//! eigenvectors; the resulting projections are orthogonal. General inputs pair
//! right and left null vectors of `A - mu` (from one SVD per cluster) and
//! normalize them to biorthogonality, `P = V (W^+ V)^{-1} W^+`.

use std::f64::consts::PI;

use nalgebra::linalg::Schur;
use num_complex::Complex64;

use super::{
    c, identity, max_abs, smallest_singular_vectors, spectral_norm, ComplexMatrix, Superoperator,
};
use crate::error::{Error, Result};

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// Residual threshold, relative to the cluster tolerance, above which a
/// cluster of the general decomposition is declared defective.
const DEFECT_FACTOR: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normality {
    /// Input is normal; projections come out Hermitian.
    Normal,
    /// Arbitrary diagonalizable input; projections are oblique.
    General,
}

#[derive(Clone, Debug)]
pub struct SpectralCluster {
    pub eigenvalue: Complex64,
    pub projection: ComplexMatrix,
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub clusters: Vec<SpectralCluster>,
    pub cluster_tolerance: f64,
    /// Near-ambiguous clustering events (pairs at distance in `(tol, 2 tol)`).
    pub warnings: Vec<String>,
    /// Largest projection norm; 1 for normal input, grows with non-normality.
    pub condition: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.clusters
            .first()
            .map(|c| c.projection.nrows())
            .unwrap_or(0)
    }

    pub fn projections(&self) -> impl Iterator<Item = &ComplexMatrix> {
        self.clusters.iter().map(|c| &c.projection)
    }

    /// `sum_k lambda_k P_k`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        self.clusters
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, cl| {
                acc + &cl.projection * cl.eigenvalue
            })
    }

    /// Cluster whose eigenvalue is within the clustering tolerance of `mu`.
    pub fn cluster_at(&self, mu: Complex64) -> Option<&SpectralCluster> {
        self.clusters
            .iter()
            .find(|cl| (cl.eigenvalue - mu).norm() <= self.cluster_tolerance)
    }

    /// Projections viewed as superoperators on `n x n` matrices, when the
    /// decomposed object was itself a superoperator.
    pub fn projection_superops(&self) -> Result<Vec<Superoperator>> {
        let n2 = self.dim();
        let n = (n2 as f64).sqrt().round() as usize;
        if n * n != n2 {
            return Err(Error::Dimension(format!(
                "decomposition of a {n2}x{n2} matrix is not a superoperator decomposition"
            )));
        }
        self.projections()
            .map(|p| Superoperator::from_matrix(n, p.clone()))
            .collect()
    }
}

/// Anything with a square matrix representation.
pub trait AsMatrix {
    fn as_matrix(&self) -> &ComplexMatrix;
}

impl AsMatrix for ComplexMatrix {
    fn as_matrix(&self) -> &ComplexMatrix {
        self
    }
}

impl AsMatrix for Superoperator {
    fn as_matrix(&self) -> &ComplexMatrix {
        self.matrix()
    }
}

fn schur(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if !super::is_finite(a) {
        return Err(Error::NonFinite);
    }
    if a.nrows() == 0 {
        return Ok((a.clone(), a.clone()));
    }
    let decomposition =
        Schur::try_new(a.clone(), f64::EPSILON, 100_000).ok_or(Error::NoConvergence)?;
    let (q, t) = decomposition.unpack();
    // guard against silent loss of accuracy in the factorization
    let defect = max_abs(&(&q * &t * q.adjoint() - a));
    if !(defect <= 1e-10 * max_abs(a).max(1.0)) {
        return Err(Error::NoConvergence);
    }
    Ok((q, t))
}

/// All eigenvalues (with repetition), read off the complex Schur form.
pub fn eigenvalues<M: AsMatrix + ?Sized>(a: &M) -> Result<Vec<Complex64>> {
    let (_, t) = schur(a.as_matrix())?;
    Ok(t.diagonal().iter().cloned().collect())
}

/// Single-linkage clustering of eigenvalues at distance `<= tol`.
fn cluster_indices(values: &[Complex64], tol: f64) -> (Vec<Vec<usize>>, Vec<String>) {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut j = i;
        while parent[j] != r {
            let next = parent[j];
            parent[j] = r;
            j = next;
        }
        r
    }
    let mut warnings = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (values[i] - values[j]).norm();
            if d <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            } else if d < 2.0 * tol {
                warnings.push(format!(
                    "eigenvalues {} and {} are {d:e} apart, within twice the clustering tolerance {tol:e}",
                    values[i], values[j]
                ));
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of_group: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of_group.iter().position(|&x| x == r) {
            Some(g) => groups[g].push(i),
            None => {
                root_of_group.push(r);
                groups.push(vec![i]);
            }
        }
    }
    (groups, warnings)
}

fn mean(values: &[Complex64], idx: &[usize]) -> Complex64 {
    idx.iter().map(|&i| values[i]).sum::<Complex64>() / c(idx.len() as f64)
}

/// Oblique spectral projection of the `m`-dimensional eigenspace at `mu`,
/// from the `m` smallest singular directions of `a - mu` on both sides. Returns the projection
/// and the norm of `(W^+ V)^{-1}`.
fn oblique_projection(
    a: &ComplexMatrix,
    mu: Complex64,
    m: usize,
    tol: f64,
) -> Result<(ComplexMatrix, f64)> {
    let n = a.nrows();
    let shifted = a - identity(n) * mu;
    let (right, right_residual) = smallest_singular_vectors(&shifted, m);
    let (left, left_residual) = smallest_singular_vectors(&shifted.adjoint(), m);
    let residual = right_residual.max(left_residual);
    let scale = max_abs(a).max(1.0);
    if residual > DEFECT_FACTOR * tol * scale {
        return Err(Error::Defective {
            eigenvalue: mu,
            multiplicity: m,
            residual,
        });
    }
    let pairing = left.adjoint() * &right;
    let inverse = pairing.try_inverse().ok_or(Error::Defective {
        eigenvalue: mu,
        multiplicity: m,
        residual,
    })?;
    let condition = spectral_norm(&inverse);
    Ok((&right * inverse * left.adjoint(), condition))
}

/// Clusters the spectrum of `a` at tolerance `tol` and returns one spectral
/// projection per cluster.
pub fn spectral_decompose<M: AsMatrix + ?Sized>(
    a: &M,
    tol: f64,
    mode: Normality,
) -> Result<SpectralDecomposition> {
    let a = a.as_matrix();
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("cluster tolerance {tol}")));
    }
    let n = a.nrows();
    if mode == Normality::Normal {
        let defect = max_abs(&(a * a.adjoint() - a.adjoint() * a));
        if defect > 1e-10 * max_abs(a).powi(2).max(1.0) {
            return Err(Error::NotNormal { defect });
        }
    }
    let (q, t) = schur(a)?;
    let values: Vec<Complex64> = t.diagonal().iter().cloned().collect();
    let (groups, warnings) = cluster_indices(&values, tol);

    let mut clusters = Vec::with_capacity(groups.len());
    let mut condition: f64 = 1.0;
    for idx in &groups {
        let mu = mean(&values, idx);
        let projection = match mode {
            Normality::Normal => {
                let qs = ComplexMatrix::from_fn(n, idx.len(), |r, k| q[(r, idx[k])]);
                &qs * qs.adjoint()
            }
            Normality::General => {
                let (p, _) = oblique_projection(a, mu, idx.len(), tol)?;
                condition = condition.max(spectral_norm(&p));
                p
            }
        };
        clusters.push(SpectralCluster {
            eigenvalue: mu,
            projection,
            multiplicity: idx.len(),
        });
    }
    clusters.sort_by(|x, y| {
        x.eigenvalue
            .re
            .total_cmp(&y.eigenvalue.re)
            .then(x.eigenvalue.im.total_cmp(&y.eigenvalue.im))
    });
    Ok(SpectralDecomposition {
        clusters,
        cluster_tolerance: tol,
        warnings,
        condition,
    })
}

/// Spectral projection of the eigenvalues of `a` within `tol` of `mu`
/// (general mode). Returns the projection, the cluster size and the pairing
/// condition number; errors if the cluster is empty or defective.
pub fn eigenprojection<M: AsMatrix + ?Sized>(
    a: &M,
    mu: Complex64,
    tol: f64,
) -> Result<(ComplexMatrix, usize, f64)> {
    let a = a.as_matrix();
    let values = eigenvalues(a)?;
    let m = values.iter().filter(|z| (**z - mu).norm() <= tol).count();
    if m == 0 {
        return Err(Error::InvalidParameter(format!(
            "{mu} is not an eigenvalue within {tol:e}"
        )));
    }
    let (p, cond) = oblique_projection(a, mu, m, tol)?;
    Ok((p, m, cond))
}

fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Bisector of the largest angular gap between the arguments of `values`,
/// normalized to `(-pi, pi]`.
pub fn largest_gap_bisector(values: &[Complex64]) -> f64 {
    if values.is_empty() {
        return PI;
    }
    let mut angles: Vec<f64> = values.iter().map(|z| z.arg()).collect();
    angles.sort_by(|a, b| a.total_cmp(b));
    let mut best_gap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
    let mut best_mid = angles[angles.len() - 1] + 0.5 * best_gap;
    for w in angles.windows(2) {
        let gap = w[1] - w[0];
        if gap > best_gap {
            best_gap = gap;
            best_mid = w[0] + 0.5 * gap;
        }
    }
    wrap_angle(best_mid)
}

/// Logarithm of a Hilbert-Schmidt unitary superoperator with the branch cut
/// on the ray at angle `cut`; log-eigenvalues have imaginary parts in
/// `(cut - 2 pi, cut)`.
pub fn matrix_log_unitary(u: &Superoperator, cut: f64) -> Result<Superoperator> {
    if !(cut > -PI && cut <= PI) {
        return Err(Error::InvalidParameter(format!(
            "branch cut angle {cut} outside (-pi, pi]"
        )));
    }
    let m = u.matrix();
    let n2 = m.nrows();
    let defect = max_abs(&(m.adjoint() * m - identity(n2)));
    if defect > 1e-10 {
        return Err(Error::NotUnitary { defect });
    }
    let (q, t) = schur(m)?;
    let values: Vec<Complex64> = t.diagonal().iter().cloned().collect();
    let mut logs = Vec::with_capacity(n2);
    for z in &values {
        let theta = z.arg();
        let distance = wrap_angle(theta - cut).abs();
        if distance < 1e-8 {
            return Err(Error::BranchCut {
                eigenvalue: *z,
                cut,
                distance,
                suggested_cut: largest_gap_bisector(&values),
            });
        }
        let phase = if theta < cut { theta } else { theta - 2.0 * PI };
        logs.push(Complex64::new(z.norm().ln(), phase));
    }
    let d = ComplexMatrix::from_fn(n2, n2, |i, j| if i == j { logs[i] } else { c(0.0) });
    Superoperator::from_matrix(u.dim(), &q * d * q.adjoint())
}

#[cfg(test)]
mod tests {
    use super::super::{diag, I};
    use super::*;

    #[test]
    fn diagonal_clusters() {
        let d = spectral_decompose(&diag(&[1.0, 1.0, 2.0]), 1e-8, Normality::Normal).unwrap();
        assert_eq!(d.clusters.len(), 2);
        assert_eq!(d.clusters[0].multiplicity, 2);
        assert!((d.clusters[0].eigenvalue - c(1.0)).norm() < 1e-14);
        assert!(max_abs(&(&d.clusters[0].projection - diag(&[1.0, 1.0, 0.0]))) < 1e-14);
        assert!(max_abs(&(&d.clusters[1].projection - diag(&[0.0, 0.0, 1.0]))) < 1e-14);
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn near_ambiguous_clusters_warn() {
        let d =
            spectral_decompose(&diag(&[1.0, 1.0 + 1.5e-8, 3.0]), 1e-8, Normality::Normal).unwrap();
        assert_eq!(d.clusters.len(), 3);
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn general_mode_oblique_projection() {
        // diag(1, 2) in a non-orthogonal basis
        let s = ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        let a = &s * diag(&[1.0, 2.0]) * s.clone().try_inverse().unwrap();
        let d = spectral_decompose(&a, 1e-8, Normality::General).unwrap();
        let sum = d.clusters[0].projection.clone() + &d.clusters[1].projection;
        assert!(max_abs(&(sum - identity(2))) < 1e-12);
        assert!(max_abs(&(d.reconstruct() - &a)) < 1e-12);
        assert!(d.condition > 1.0);
        assert!(matches!(
            spectral_decompose(&a, 1e-8, Normality::Normal),
            Err(Error::NotNormal { .. })
        ));
    }

    #[test]
    fn jordan_block_is_defective() {
        let j = ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(matches!(
            eigenprojection(&j, c(1.0), 1e-8),
            Err(Error::Defective { .. })
        ));
    }

    #[test]
    fn gap_bisector() {
        let values = [
            c(1.0),
            c(1.0),
            Complex64::from_polar(1.0, 1.0),
            Complex64::from_polar(1.0, -1.0),
        ];
        assert!((largest_gap_bisector(&values) - PI).abs() < 1e-14);
        let single = [Complex64::from_polar(1.0, 0.5)];
        assert!((largest_gap_bisector(&single) - (0.5 - PI)).abs() < 1e-14);
    }

    #[test]
    fn log_of_identity_is_zero() {
        let l = matrix_log_unitary(&Superoperator::identity(2), PI).unwrap();
        assert!(max_abs(l.matrix()) < 1e-15);
    }

    #[test]
    fn log_branch_and_collision() {
        let s = 1.0;
        let d = Superoperator::derivation(&diag(&[0.0, s])).unwrap();
        let u = d.exp().unwrap();
        let l = matrix_log_unitary(&u, PI).unwrap();
        let mut ev: Vec<f64> = eigenvalues(&l).unwrap().iter().map(|z| z.im).collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        for (got, want) in ev.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(max_abs(&(l.exp().unwrap().matrix() - u.matrix())) < 1e-12);

        match matrix_log_unitary(&u, 1.0) {
            Err(Error::BranchCut { suggested_cut, .. }) => {
                assert!((suggested_cut - PI).abs() < 1e-12)
            }
            other => panic!("expected branch cut collision, got {other:?}"),
        }
        let _ = I;
    }
}
