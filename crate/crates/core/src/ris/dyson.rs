//! Terms of the Dyson expansion of the coupled evolution,
//!
//! ```text
//! exp(t (L0 + eps C)) = sum_k eps^k phi_k^t alpha^t,
//! phi_k^t = int_{0 < t1 < ... < tk < t} g(t1) ... g(tk),  g(s) = alpha^s C alpha^{-s},
//! ```
//!
//! with `L0` the free derivation, `C = [v, .]` and `eps = i lambda`.

use std::f64::consts::PI;

use super::RISModel;
use crate::error::{invalid, Error, Result};
use crate::linop::{c, identity, ComplexMatrix, Superoperator, I};

pub const MAX_DYSON_ORDER: usize = 8;
/// Largest block-exponential dimension accepted by [`dyson_term`].
const MAX_BLOCK_DIM: usize = 4096;
/// Largest number of integrand evaluations accepted by the quadrature.
const MAX_QUADRATURE_EVALS: f64 = 4e6;

fn check_order(k: usize) -> Result<()> {
    if k == 0 {
        return invalid("Dyson order must be at least 1");
    }
    if k > MAX_DYSON_ORDER {
        return Err(Error::CostGuard(format!(
            "Dyson order {k} exceeds {MAX_DYSON_ORDER}"
        )));
    }
    Ok(())
}

/// `phi_k^t` as the top-right block of the exponential of the block
/// upper-bidiagonal matrix with `L0` on the diagonal and `C` above it,
/// multiplied on the right by `alpha^{-t}`.
pub fn dyson_term(model: &RISModel, k: usize, t: f64) -> Result<Superoperator> {
    check_order(k)?;
    if !t.is_finite() {
        return Err(Error::NonFinite);
    }
    let l0 = model.free_generator().matrix();
    let cv = model.coupling().matrix();
    let d = l0.nrows();
    let size = (k + 1) * d;
    if size > MAX_BLOCK_DIM {
        return Err(Error::CostGuard(format!(
            "block exponential of dimension {size} exceeds {MAX_BLOCK_DIM}"
        )));
    }
    let mut block = ComplexMatrix::zeros(size, size);
    for j in 0..=k {
        block.view_mut((j * d, j * d), (d, d)).copy_from(l0);
        if j < k {
            block.view_mut((j * d, (j + 1) * d), (d, d)).copy_from(cv);
        }
    }
    let e = crate::linop::matrix_exp(&(block * c(t)))?;
    let corner = e.view((0, k * d), (d, d)).clone_owned();
    let back = model.free_generator().exp_scaled(-t)?;
    Superoperator::from_matrix(model.n_s() * model.n_e(), corner * back.matrix())
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Free evolution `alpha^s` from an eigendecomposition of the full Hamiltonian.
struct FreeFlow {
    vectors: ComplexMatrix,
    energies: Vec<f64>,
    coupling: ComplexMatrix,
}

impl FreeFlow {
    fn new(model: &RISModel) -> Self {
        let eig = model.full_hamiltonian().symmetric_eigen();
        Self {
            vectors: eig.eigenvectors.clone(),
            energies: eig.eigenvalues.iter().cloned().collect(),
            coupling: model.coupling().matrix().clone(),
        }
    }

    /// `alpha^s`, i.e. `x -> e^{-isH} x e^{isH}`.
    fn alpha(&self, s: f64) -> ComplexMatrix {
        let n = self.energies.len();
        let phases = ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (-I * (s * self.energies[i])).exp()
            } else {
                c(0.0)
            }
        });
        let w = &self.vectors * phases * self.vectors.adjoint();
        crate::linop::kron(&w, &w.conjugate())
    }

    fn integrand(&self, s: f64) -> ComplexMatrix {
        self.alpha(s) * &self.coupling * self.alpha(-s)
    }
}

fn nested(flow: &FreeFlow, rule: &(Vec<f64>, Vec<f64>), j: usize, upper: f64) -> ComplexMatrix {
    let d = flow.coupling.nrows();
    if j == 0 {
        return identity(d);
    }
    let half = 0.5 * upper;
    let mut acc = ComplexMatrix::zeros(d, d);
    for (x, w) in rule.0.iter().zip(&rule.1) {
        let s = half * (x + 1.0);
        acc += nested(flow, rule, j - 1, s) * flow.integrand(s) * c(w * half);
    }
    acc
}

/// `phi_k^t` by nested Gauss-Legendre quadrature over the time simplex,
/// with `nodes` points per nesting level. Independent of [`dyson_term`].
pub fn dyson_term_quadrature(
    model: &RISModel,
    k: usize,
    t: f64,
    nodes: usize,
) -> Result<Superoperator> {
    check_order(k)?;
    if nodes == 0 {
        return invalid("quadrature needs at least one node");
    }
    if (nodes as f64).powi(k as i32) > MAX_QUADRATURE_EVALS {
        return Err(Error::CostGuard(format!(
            "{nodes}^{k} quadrature evaluations exceed {MAX_QUADRATURE_EVALS:e}"
        )));
    }
    let flow = FreeFlow::new(model);
    let rule = gauss_legendre(nodes);
    let m = nested(&flow, &rule, k, t);
    Superoperator::from_matrix(model.n_s() * model.n_e(), m)
}

/// Bound on the Dyson remainder after `n` terms,
/// `e^{growth t} (eps t)^n sum_{k >= n} (eps t)^{k-n} m^{k+1} a^k / k!`.
pub fn dyson_truncation_bound(
    n: usize,
    eps: f64,
    t: f64,
    a1_norm: f64,
    m: f64,
    growth: f64,
) -> Result<f64> {
    if n == 0 {
        return invalid("truncation order must be at least 1");
    }
    for (name, x) in [
        ("eps", eps),
        ("t", t),
        ("a1_norm", a1_norm),
        ("m", m),
        ("growth", growth),
    ] {
        if !(x >= 0.0) || !x.is_finite() {
            return invalid(format!("{name} = {x} must be finite and nonnegative"));
        }
    }
    let x = eps * t * m * a1_norm;
    // first term m (x)^n / n!, built in logs to stay finite for large n
    let ln_first = if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        m.ln() + n as f64 * x.ln() - (1..=n).map(|j| (j as f64).ln()).sum::<f64>()
    };
    let mut term = ln_first.exp();
    let mut sum = 0.0;
    let mut k = n;
    while term > 0.0 {
        sum += term;
        k += 1;
        term *= x / k as f64;
        if term < 1e-18 * sum && k as f64 > x {
            break;
        }
    }
    Ok((growth * t).exp() * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{diag, kron, max_abs};

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((integral - 2.0 / 9.0).abs() < 1e-14);
        let (x32, w32) = gauss_legendre(32);
        assert!((w32.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        let cos: f64 = x32.iter().zip(&w32).map(|(x, w)| w * x.cos()).sum();
        assert!((cos - 2.0 * 1f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn bound_closed_forms() {
        let e1 = dyson_truncation_bound(1, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!((e1 - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert_eq!(
            dyson_truncation_bound(3, 0.0, 2.0, 1.0, 1.0, 0.0).unwrap(),
            0.0
        );
        assert!(dyson_truncation_bound(0, 1.0, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn first_term_for_commuting_coupling() {
        // v a function of the free Hamiltonian: the integrand is constant
        let h = diag(&[0.0, 1.0]);
        let v = kron(&diag(&[0.5, -1.0]), &identity(2)) + kron(&identity(2), &diag(&[0.0, 0.3]));
        let m = RISModel::new(h.clone(), h, v, 1.0).unwrap();
        let t = 0.8;
        let phi1 = dyson_term(&m, 1, t).unwrap();
        assert!(max_abs(&(phi1.matrix() - m.coupling().matrix() * c(t))) < 1e-13);
    }

    #[test]
    fn order_guard() {
        let h = diag(&[0.0, 1.0]);
        let m = RISModel::new(h.clone(), h, identity(4), 1.0).unwrap();
        assert!(matches!(dyson_term(&m, 9, 1.0), Err(Error::CostGuard(_))));
        assert!(dyson_term(&m, 0, 1.0).is_err());
    }
}
