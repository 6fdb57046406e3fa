use num_complex::Complex64;
use proptest::prelude::*;

use ris_core::linop::{
    c, complete_positivity, eigenvalues, hermitian_eigenvalues, hermitian_part, identity, kron,
    largest_gap_bisector, matrix_exp, matrix_log_unitary, max_abs, spectral_decompose, trace,
    ComplexMatrix, Normality, Superoperator, DEFAULT_CLUSTER_TOL,
};
use ris_core::ris::{gibbs_state, ConditionalExpectation};
use ris_core::spin::{build_spin_model, SpinParams};
use ris_core::vanhove::{effective_generator_weak_coupling, log_generator_a0, spectral_average};

fn entry() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(entry(), n * n).prop_map(move |v| ComplexMatrix::from_row_slice(n, n, &v))
}

fn hermitian(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(n).prop_map(|m| hermitian_part(&m))
}

/// Normalized `g g^+`.
fn density(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(n).prop_map(|g| {
        let rho = &g * g.adjoint() + identity(g.nrows()) * c(1e-3);
        let tr = trace(&rho);
        rho / tr
    })
}

fn superop(n: usize) -> impl Strategy<Value = Superoperator> {
    matrix(n * n).prop_map(move |m| Superoperator::from_matrix(n, m).unwrap())
}

/// `(id (x) t)(x)` for `x` on `C^n (x) C^n`.
fn ampliate(t: &Superoperator, x: &ComplexMatrix) -> ComplexMatrix {
    let n = t.dim();
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for k in 0..n {
        for l in 0..n {
            let block = x.view((k * n, l * n), (n, n)).into_owned();
            out.view_mut((k * n, l * n), (n, n))
                .copy_from(&t.apply(&block));
        }
    }
    out
}

/// `(1 - p) x -> Tr(x) I / 2 + p x -> x^T` on 2x2 matrices. Its Choi matrix is
/// `(1-p)/2 I + p SWAP`, so it is completely positive exactly for `p <= 1/3`.
fn depolarize_transpose_mix(p: f64) -> Superoperator {
    let mut m = ComplexMatrix::zeros(4, 4);
    for k in 0..2 {
        for l in 0..2 {
            let col = k * 2 + l;
            if k == l {
                m[(0, col)] += c(0.5 * (1.0 - p));
                m[(3, col)] += c(0.5 * (1.0 - p));
            }
            m[(l * 2 + k, col)] += c(p);
        }
    }
    Superoperator::from_matrix(2, m).unwrap()
}

fn singlet() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = nalgebra::DVector::from_vec(vec![c(0.0), c(s), c(-s), c(0.0)]);
    &psi * psi.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exp_log_round_trip(h in hermitian(3), t in 0.05f64..2.0) {
        let alpha = Superoperator::derivation(&h).unwrap().exp_scaled(t).unwrap();
        let cut = largest_gap_bisector(&eigenvalues(&alpha).unwrap());
        let log = matrix_log_unitary(&alpha, cut).unwrap();
        let back = log.exp().unwrap();
        prop_assert!(max_abs(&(back.matrix() - alpha.matrix())) < 1e-9);
    }

    #[test]
    fn general_decomposition_reconstructs(a in matrix(4)) {
        let dec = spectral_decompose(&a, DEFAULT_CLUSTER_TOL, Normality::General);
        prop_assume!(dec.is_ok());
        let dec = dec.unwrap();
        let total = dec.projections().fold(ComplexMatrix::zeros(4, 4), |acc, p| acc + p);
        prop_assert!(max_abs(&(dec.reconstruct() - &a)) < 1e-7 * dec.condition.max(1.0));
        prop_assert!(max_abs(&(total - identity(4))) < 1e-7 * dec.condition.max(1.0));
    }

    #[test]
    fn normal_decomposition_of_derivation(h in hermitian(2)) {
        let d = Superoperator::derivation(&h).unwrap();
        let dec = spectral_decompose(&d, DEFAULT_CLUSTER_TOL, Normality::Normal).unwrap();
        prop_assert!(max_abs(&(dec.reconstruct() - d.matrix())) < 1e-10);
        for p in dec.projections() {
            prop_assert!(max_abs(&(p * p - p)) < 1e-10);
            prop_assert!(max_abs(&(p.adjoint() - p)) < 1e-10);
        }
    }

    #[test]
    fn derivation_annihilates_identity(h in hermitian(3)) {
        let d = Superoperator::derivation(&h).unwrap();
        prop_assert!(max_abs(&d.apply(&identity(3))) < 1e-14);
    }

    #[test]
    fn matrix_exp_of_hermitian_generator_is_unitary(h in hermitian(4), t in -3.0f64..3.0) {
        let u = matrix_exp(&(h * Complex64::new(0.0, -t))).unwrap();
        prop_assert!(max_abs(&(&u * u.adjoint() - identity(4))) < 1e-12);
    }

    #[test]
    fn conditional_expectation_properties(
        h_e in hermitian(2),
        beta in 0.0f64..3.0,
        x in matrix(4),
        a in matrix(2),
        b in matrix(2),
        rho in density(4),
    ) {
        let e = ConditionalExpectation::new(2, &gibbs_state(&h_e, beta).unwrap());
        // unital
        prop_assert!(max_abs(&(e.reduce(&identity(4)) - identity(2))) < 1e-14);
        // identity on the small-system algebra, hence idempotent
        prop_assert!(max_abs(&(e.reduce(&e.embed(&a)) - &a)) < 1e-14);
        let ex = e.embed(&e.reduce(&x));
        prop_assert!(max_abs(&(e.embed(&e.reduce(&ex)) - &ex)) < 1e-14);
        // bimodule
        let sandwiched = e.embed(&a) * &x * e.embed(&b);
        prop_assert!(max_abs(&(e.reduce(&sandwiched) - &a * e.reduce(&x) * &b)) < 1e-13);
        // positive
        let reduced = e.reduce(&rho);
        prop_assert!(hermitian_eigenvalues(&hermitian_part(&reduced))[0] > -1e-14);
        // the superoperator form agrees with reduce/embed
        let full = e.as_superoperator();
        prop_assert!(max_abs(&(full.apply(&x) - &ex)) < 1e-14);
    }

    #[test]
    fn dual_pairs_with_trace(t in superop(2), rho in density(2), x in matrix(2)) {
        let lhs = trace(&(t.dual().apply(&rho) * &x));
        let rhs = trace(&(&rho * t.apply(&x)));
        prop_assert!((lhs - rhs).norm() < 1e-13);
        prop_assert!(max_abs(&(t.dual().dual().matrix() - t.matrix())) < 1e-15);
    }

    #[test]
    fn spectral_average_is_idempotent(
        s in 0.2f64..2.0,
        e in 0.2f64..2.0,
        beta in 0.0f64..2.0,
        tau in 0.1f64..2.0,
        b in entry(),
        cc in entry(),
    ) {
        let model = build_spin_model(&SpinParams::new(s, e, beta, tau, b, cc)).unwrap();
        let gen = effective_generator_weak_coupling(&model, tau, None);
        prop_assume!(gen.is_ok());
        let gen = gen.unwrap();
        let again = spectral_average(&gen.generator, &gen.averaging_basis).unwrap();
        prop_assert!(max_abs(&(again.matrix() - gen.generator.matrix())) < 1e-12);
        let a0 = log_generator_a0(&model, tau, gen.branch_cut_angle).unwrap().a0;
        prop_assert!(max_abs(a0.commutator_with(&gen.generator).matrix()) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The Choi verdict agrees with brute force: a map flagged CP keeps 200
    /// random two-party states positive, and a map flagged non-CP is caught
    /// by at least one input.
    #[test]
    fn choi_criterion_matches_brute_force(
        p in prop_oneof![0.0f64..0.28, 0.38f64..1.0],
        inputs in prop::collection::vec(density(4), 199),
    ) {
        let t = depolarize_transpose_mix(p);
        let verdict = complete_positivity(&t, 1e-10).is_cp;
        prop_assert_eq!(verdict, p <= 1.0 / 3.0);
        let worst = inputs
            .iter()
            .chain(std::iter::once(&singlet()))
            .map(|rho| hermitian_eigenvalues(&hermitian_part(&ampliate(&t, rho)))[0])
            .fold(f64::INFINITY, f64::min);
        if verdict {
            prop_assert!(worst >= -1e-12, "{worst}");
        } else {
            prop_assert!(worst < 0.0, "{worst}");
        }
    }

    #[test]
    fn kraus_maps_are_cp(k1 in matrix(2), k2 in matrix(2), inputs in prop::collection::vec(density(4), 200)) {
        let t = &Superoperator::sandwich(&k1.adjoint(), &k1) + &Superoperator::sandwich(&k2.adjoint(), &k2);
        prop_assert!(complete_positivity(&t, 1e-10).is_cp);
        for rho in &inputs {
            prop_assert!(hermitian_eigenvalues(&hermitian_part(&ampliate(&t, rho)))[0] > -1e-12);
        }
    }
}

#[test]
fn ampliation_matches_kron_for_product_maps() {
    let a = ComplexMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
    let t = Superoperator::conjugation(&a);
    let x = kron(&identity(2), &a);
    let want = kron(&identity(2), &t.apply(&a));
    assert!(max_abs(&(ampliate(&t, &x) - want)) < 1e-14);
}
