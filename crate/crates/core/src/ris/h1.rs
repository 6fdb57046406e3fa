use super::RISModel;
use crate::linop::{identity, kron, max_abs, ComplexMatrix};

const H1_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum H1Status {
    Holds,
    Violated,
    /// The model carries no `p0`.
    NotApplicable,
}

/// Outcome of the parity hypothesis check: `p0` is an invariant projection
/// and `v` only couples the range of `P0 = I (x) p0` with its complement.
#[derive(Clone, Debug)]
pub struct H1Report {
    pub status: H1Status,
    pub projection_defect: f64,
    pub invariance_defect: f64,
    /// `|| v - (P0 v (1 - P0) + (1 - P0) v P0) ||`, the largest entry of the
    /// diagonal blocks of `v`.
    pub coupling_defect: f64,
    /// `|| E_S(P0 x) - E_S(x P0) ||` on the elementary basis; zero for a
    /// Gibbs chain state.
    pub kms_defect: f64,
    pub violations: Vec<String>,
}

impl H1Report {
    pub fn holds(&self) -> bool {
        self.status == H1Status::Holds
    }
}

pub fn check_h1(model: &RISModel) -> H1Report {
    let Some(p0) = model.p0() else {
        return H1Report {
            status: H1Status::NotApplicable,
            projection_defect: f64::NAN,
            invariance_defect: f64::NAN,
            coupling_defect: f64::NAN,
            kms_defect: f64::NAN,
            violations: vec!["no p0 attached to the model".into()],
        };
    };
    let (n_s, n_e) = (model.n_s(), model.n_e());
    let n = n_s * n_e;
    let projection_defect = max_abs(&(p0 * p0 - p0)).max(max_abs(&(p0 - p0.adjoint())));
    let invariance_defect = max_abs(&(model.h_e() * p0 - p0 * model.h_e()));

    let big_p = kron(&identity(n_s), p0);
    let q = identity(n) - &big_p;
    let v = model.v();
    let off = &big_p * v * &q + &q * v * &big_p;
    let diag_pp = &big_p * v * &big_p;
    let diag_qq = &q * v * &q;
    let coupling_defect = max_abs(&(v - off));

    let ce = model.conditional_expectation();
    let mut kms_defect: f64 = 0.0;
    for k in 0..n {
        for l in 0..n {
            let mut x = ComplexMatrix::zeros(n, n);
            x[(k, l)] = num_complex::Complex64::new(1.0, 0.0);
            let d = ce.reduce(&(&big_p * &x)) - ce.reduce(&(&x * &big_p));
            kms_defect = kms_defect.max(max_abs(&d));
        }
    }

    let scale = max_abs(v).max(1.0);
    let mut violations = Vec::new();
    if projection_defect > H1_TOL {
        violations.push(format!(
            "p0 is not an orthogonal projection ({projection_defect:e})"
        ));
    }
    if invariance_defect > H1_TOL * max_abs(model.h_e()).max(1.0) {
        violations.push(format!("[h_E, p0] = {invariance_defect:e}"));
    }
    if coupling_defect > H1_TOL * scale {
        let pp = max_abs(&diag_pp);
        let qq = max_abs(&diag_qq);
        if pp > H1_TOL * scale {
            violations.push(format!("P0 v P0 survives with max entry {pp:e}"));
        }
        if qq > H1_TOL * scale {
            violations.push(format!("(1-P0) v (1-P0) survives with max entry {qq:e}"));
        }
    }
    H1Report {
        status: if violations.is_empty() {
            H1Status::Holds
        } else {
            H1Status::Violated
        },
        projection_defect,
        invariance_defect,
        coupling_defect,
        kms_defect,
        violations,
    }
}
