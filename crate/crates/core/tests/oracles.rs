//! Reference values computed before the build with an independent numpy/scipy
//! prototype (dense `expm`, `logm`, `eig`; finite differences in the coupling
//! for the second-order term) and frozen here. Generator entries are compared
//! with the closed forms, since the finite differences carry errors near 1e-7.

use num_complex::Complex64;
use ris_core::asymptotics::{compare_orders, parametrized_tau_experiment};
use ris_core::linop::{c, diag, max_abs};
use ris_core::ris::gibbs_state;
use ris_core::spin::{build_spin_model, closed_form_deltas, SpinParams};
use ris_core::vanhove::{
    converge_lambda, converge_lambda_interpolated, converge_tau, effective_generator_weak_coupling,
};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn reference() -> SpinParams {
    SpinParams::new(1.0, 2.0, 1.0, 1.0, ONE, ONE)
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

#[test]
fn gibbs_state_reference() {
    let rho = gibbs_state(&diag(&[0.0, 2.0]), 1.0).unwrap();
    assert!((rho.rho()[(0, 0)].re - 0.8807970779778823).abs() < 1e-15);
    assert!((rho.rho()[(1, 1)].re - 0.11920292202211755).abs() < 1e-15);
}

#[test]
fn weak_generator_reference_points() {
    // (S, E, beta, tau, b, c) -> (delta0, delta1), closed forms evaluated in numpy
    let cases = [
        (
            (1.0, 2.0, 1.0, 1.0, ONE, ONE),
            (-0.4991011892643799, -0.8625147537994394),
        ),
        (
            (0.5, 1.0, 0.0, 0.5, Complex64::new(0.0, 1.0), c(2.0)),
            (-0.6166506442413194, -0.6166506442413194),
        ),
        (
            (1.0, 1.0, 1.0, 1.0, ONE, c(0.0)),
            (-0.5176431467287659, -0.19043027154480532),
        ),
    ];
    for ((s, e, beta, tau, b, cc), (d0, d1)) in cases {
        let p = SpinParams::new(s, e, beta, tau, b, cc);
        let gen = effective_generator_weak_coupling(&build_spin_model(&p).unwrap(), tau, None)
            .unwrap()
            .generator;
        assert!((gen.element((0, 0), (0, 0)).re - d0).abs() < 1e-9, "{p:?}");
        assert!((gen.element((1, 1), (1, 1)).re - d1).abs() < 1e-9, "{p:?}");
        let (f0, f1) = closed_form_deltas(&p);
        assert!((f0 - d0).abs() < 1e-9 && (f1 - d1).abs() < 1e-9, "{p:?}");
    }
}

#[test]
fn off_diagonal_entry_reference() {
    let m = build_spin_model(&reference()).unwrap();
    let gen = effective_generator_weak_coupling(&m, 1.0, None)
        .unwrap()
        .generator;
    let z = gen.element((0, 1), (0, 1));
    assert!((z.re - -0.6808079715319095).abs() < 1e-9);
    assert!((z.im - 0.15912431724568896).abs() < 1e-9);
}

#[test]
fn sweep_sup_errors_reference() {
    let m = build_spin_model(&reference()).unwrap();
    let lambdas = [0.2, 0.1, 0.05];
    let lattice = converge_lambda(&m, 1.0, &lambdas, 5.0, 50).unwrap();
    let want = [
        0.04049793029735717,
        0.009160517891751346,
        0.0025921542479102207,
    ];
    for ((_, got), want) in lattice.sup_errors.iter().zip(want) {
        assert!(close(*got, want, 1e-6), "{got} vs {want}");
    }
    let interp = converge_lambda_interpolated(&m, 1.0, &lambdas, 5.0, 50).unwrap();
    let want = [
        0.027088993775621798,
        0.007198819986498905,
        0.0005400854085486612,
    ];
    for ((_, got), want) in interp.sup_errors.iter().zip(want) {
        assert!(close(*got, want, 1e-6), "{got} vs {want}");
    }
    let fast = converge_tau(&m, &[(1.0, 0.2), (1.0, 0.1), (1.0, 0.05)], 5.0, 50).unwrap();
    let want = [
        0.17113028663493843,
        0.08116631862097277,
        0.04218923699777011,
    ];
    for ((_, got), want) in fast.sup_errors.iter().zip(want) {
        assert!(close(*got, want, 1e-6), "{got} vs {want}");
    }
}

#[test]
fn asymptotic_distances_reference() {
    let m = build_spin_model(&reference()).unwrap();
    let cmp = compare_orders(&m, 1.0, &[0.2, 0.1, 0.05]).unwrap();
    let want = [
        0.0003900167933550136,
        9.720681369615458e-05,
        2.4283189773682823e-05,
    ];
    for ((_, got), want) in cmp.rows.iter().zip(want) {
        assert!(close(*got, want, 1e-6), "{got} vs {want}");
    }
    let (rows, _) = parametrized_tau_experiment(&m, 1, &[0.2, 0.1, 0.05]).unwrap();
    let want = [
        0.0051077329412235195,
        0.0012712272158677262,
        0.0003174498918493418,
    ];
    for (row, want) in rows.iter().zip(want) {
        assert!(
            close(row.distance, want, 1e-6),
            "{} vs {want}",
            row.distance
        );
    }
}

#[test]
fn fast_effective_state_is_balanced_for_equal_channels() {
    let m = build_spin_model(&reference()).unwrap();
    let cmp = parametrized_tau_experiment(&m, 1, &[0.1]).unwrap();
    assert!(cmp.0[0].distance > 0.0);
    let gen = ris_core::vanhove::effective_generator_fast_repetition(&m).unwrap();
    let st = ris_core::asymptotics::effective_asymptotic_state(&gen, 1e-9, 10.0).unwrap();
    assert!(max_abs(&(st.density.unwrap() - diag(&[0.5, 0.5]))) < 1e-12);
}
