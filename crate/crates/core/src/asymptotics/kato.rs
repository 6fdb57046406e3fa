// Structure of the eigenvalue-1 projection P(eps) of T(sqrt(eps), tau) as
// eps -> 0+. P(0) projects onto the fixed points of the free map; the first
// derivative T' = -E_S phi_2 alpha_S^tau compressed to that range selects Q,
// and the one-sided limit P(0+) sits below P(0) Q.

use crate::error::{invalid, Error, Result};
use crate::linop::{c, eigenprojection, superop_norm, trace, Superoperator, DEFAULT_CLUSTER_TOL};
use crate::ris::RISModel;
use crate::vanhove::second_order_term;

#[derive(Clone, Debug)]
pub struct KatoReport {
    pub p0: Superoperator,
    pub t_prime: Superoperator,
    pub q: Superoperator,
    pub p0_q: Superoperator,
    pub p_zero_plus: Superoperator,
    /// `||[Q, P(0)]||`.
    pub commutation_defect: f64,
    /// `||(P(0)Q)^2 - P(0)Q||`.
    pub idempotence_defect: f64,
    /// `max(||P(0)Q P(0+) - P(0+)||, ||P(0+) P(0)Q - P(0+)||)`.
    pub subprojection_defect: f64,
    pub trace_p_zero_plus: f64,
    /// `(eps, ||P(eps) - P(0+)||)`.
    pub distances: Vec<(f64, f64)>,
    /// `(d_i / d_{i+1}) / (eps_i / eps_{i+1})`, close to 1 for a linear
    /// approach.
    pub rate_ratios: Vec<f64>,
    pub rate_consistent: bool,
}

impl KatoReport {
    pub fn passes(&self) -> bool {
        self.commutation_defect <= 1e-8
            && self.idempotence_defect <= 1e-8
            && self.subprojection_defect <= 1e-6
            && self.rate_consistent
    }
}

/// Relative tolerance of the linear-rate test.
const RATE_TOL: f64 = 0.25;
/// Differences below this are treated as exactly constant.
const FLAT: f64 = 1e-12;

pub fn kato_structure_check(model: &RISModel, tau: f64, eps_list: &[f64]) -> Result<KatoReport> {
    if eps_list.len() < 2 {
        return invalid("extrapolation needs at least two eps values");
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("eps values must be positive and strictly decreasing");
    }
    let n = model.n_s();
    let superop = |m| Superoperator::from_matrix(n, m);

    let alpha = model.free_small_dynamics(tau)?;
    let p0 = superop(eigenprojection(&alpha, c(1.0), DEFAULT_CLUSTER_TOL)?.0)?;
    let t_prime = -&second_order_term(model, tau)?.compose(&alpha);
    let compressed = p0.compose(&t_prime).compose(&p0);
    let zero_tol = DEFAULT_CLUSTER_TOL * superop_norm(&compressed).max(1.0);
    let q = superop(eigenprojection(&compressed, c(0.0), zero_tol)?.0)?;
    let p0_q = p0.compose(&q);

    let projections = eps_list
        .iter()
        .map(|&eps| {
            let t = model.reduced_map(eps.sqrt(), tau)?;
            superop(eigenprojection(&t, c(1.0), DEFAULT_CLUSTER_TOL)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = eps_list.len();
    let (e1, e2) = (eps_list[k - 2], eps_list[k - 1]);
    let (p1, p2) = (&projections[k - 2], &projections[k - 1]);
    let p_zero_plus = p2 + &(p2 - p1).scale(c(e2 / (e1 - e2)));

    let distances: Vec<(f64, f64)> = eps_list
        .iter()
        .zip(&projections)
        .map(|(&e, p)| (e, superop_norm(&(p - &p_zero_plus))))
        .collect();
    let flat = distances.iter().all(|(_, d)| *d <= FLAT);
    if !flat && distances.windows(2).any(|w| w[1].1 > w[0].1) {
        return Err(Error::UnstableExtrapolation(format!(
            "||P(eps) - P(0+)|| is not monotone: {distances:?}"
        )));
    }
    let rate_ratios: Vec<f64> = if flat {
        Vec::new()
    } else {
        distances
            .windows(2)
            .map(|w| (w[0].1 / w[1].1) / (w[0].0 / w[1].0))
            .collect()
    };
    let rate_consistent = rate_ratios.iter().all(|r| (r - 1.0).abs() <= RATE_TOL);

    let commutation_defect = superop_norm(&q.commutator_with(&p0));
    let idempotence_defect = superop_norm(&(&p0_q.compose(&p0_q) - &p0_q));
    let subprojection_defect = superop_norm(&(&p0_q.compose(&p_zero_plus) - &p_zero_plus))
        .max(superop_norm(&(&p_zero_plus.compose(&p0_q) - &p_zero_plus)));
    Ok(KatoReport {
        trace_p_zero_plus: trace(p_zero_plus.matrix()).re,
        p0,
        t_prime,
        q,
        p0_q,
        p_zero_plus,
        commutation_defect,
        idempotence_defect,
        subprojection_defect,
        distances,
        rate_ratios,
        rate_consistent,
    })
}
