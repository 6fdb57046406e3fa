//! Two coupled spins: `h_S = diag(0, S)`, `h_E = diag(0, E)` and
//! `v = sigma+ (x) B + sigma- (x) B^+` with `B = [[a, b], [c, d]]`.
//!
//! With `a = d = 0` the averaged second-order generator is known in closed
//! form. The `b` entry pairs the raising of the system with the raising of
//! the chain element, so it oscillates at `E + S`; the `c` entry exchanges
//! an excitation and oscillates at `E - S`. Writing `w = e^{-beta E}` and
//! `f(x) = (1 - cos tau x) / x^2`,
//!
//! ```text
//! delta0 = -2/(1+w) (  |b|^2 f(E+S) + w |c|^2 f(E-S) )
//! delta1 = -2/(1+w) (w |b|^2 f(E+S) +   |c|^2 f(E-S) )
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linop::{c, diag, elementary, kron, ComplexMatrix};
use crate::ris::RISModel;
use crate::vanhove::effective_generator_weak_coupling;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinParams {
    pub s: f64,
    pub e: f64,
    pub beta: f64,
    pub tau: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl SpinParams {
    /// Parameters with `a = d = 0`.
    pub fn new(s: f64, e: f64, beta: f64, tau: f64, b: Complex64, c: Complex64) -> Self {
        Self {
            s,
            e,
            beta,
            tau,
            a: Complex64::new(0.0, 0.0),
            b,
            c,
            d: Complex64::new(0.0, 0.0),
        }
    }

    pub fn with_diagonal(mut self, a: Complex64, d: Complex64) -> Self {
        self.a = a;
        self.d = d;
        self
    }

    pub fn coupling_strength(&self) -> f64 {
        self.b.norm_sqr() + self.c.norm_sqr()
    }

    pub fn b_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[self.a, self.b, self.c, self.d])
    }

    pub fn is_off_diagonal(&self) -> bool {
        self.a == Complex64::new(0.0, 0.0) && self.d == Complex64::new(0.0, 0.0)
    }
}

pub fn build_spin_model(p: &SpinParams) -> Result<RISModel> {
    let raise = elementary(2, 0, 1);
    let b = p.b_matrix();
    let v = kron(&raise, &b) + kron(&raise.adjoint(), &b.adjoint());
    let model = RISModel::new(diag(&[0.0, p.s]), diag(&[0.0, p.e]), v, p.beta)?;
    if p.is_off_diagonal() {
        model.with_p0(elementary(2, 0, 0))
    } else {
        Ok(model)
    }
}

/// `(1 - cos tau x) / x^2`, continued by its series near `x = 0`.
fn resonance_kernel(tau: f64, x: f64) -> f64 {
    let y = tau * x;
    if y.abs() < 1e-4 {
        // 1 - cos y = y^2/2 - y^4/24 + y^6/720
        let y2 = y * y;
        tau * tau * (0.5 - y2 / 24.0 + y2 * y2 / 720.0)
    } else {
        let h = (0.5 * y).sin();
        2.0 * h * h / (x * x)
    }
}

/// `(delta0, delta1)`, the diagonal entries `<u00|gen|u00>` and
/// `<u11|gen|u11>` of the weak-coupling generator for `a = d = 0`.
pub fn closed_form_deltas(p: &SpinParams) -> (f64, f64) {
    let w = (-p.beta * p.e).exp();
    let pre = -2.0 / (1.0 + w);
    let plus = resonance_kernel(p.tau, p.e + p.s);
    let minus = resonance_kernel(p.tau, p.e - p.s);
    let (b2, c2) = (p.b.norm_sqr(), p.c.norm_sqr());
    (
        pre * (b2 * plus + w * c2 * minus),
        pre * (w * b2 * plus + c2 * minus),
    )
}

/// Off-diagonal decay check at one interaction time.
#[derive(Clone, Copy, Debug)]
pub struct OffDiagonalCheck {
    pub tau: f64,
    /// `Re <u01|gen|u01>`.
    pub value: f64,
    /// `-(tau^2/2)(|b|^2 + |c|^2) + 10 tau^3 ||B||_F^2`.
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct SpinGeneratorReport {
    /// Largest entry coupling `{u00, u11}` with `{u01, u10}`.
    pub block_defect: f64,
    /// `[[g(00,00), g(00,11)], [g(11,00), g(11,11)]]`.
    pub diagonal_block: [[Complex64; 2]; 2],
    /// Largest row sum of the diagonal block (zero by unitality).
    pub row_sum_defect: f64,
    /// `(|g(00,00) - delta0|, |g(11,11) - delta1|)`, only for `a = d = 0`.
    pub delta_errors: Option<(f64, f64)>,
    pub off_diagonal: Vec<OffDiagonalCheck>,
}

impl SpinGeneratorReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.block_defect <= tol
            && self.row_sum_defect <= tol
            && self
                .delta_errors
                .is_none_or(|(e0, e1)| e0 <= tol && e1 <= tol)
            && self.off_diagonal.iter().all(|o| o.passed)
    }
}

/// Structural checks of the numerically computed weak-coupling generator
/// against the closed forms.
pub fn closed_form_generator_checks(p: &SpinParams) -> Result<SpinGeneratorReport> {
    let model = build_spin_model(p)?;
    let gen = effective_generator_weak_coupling(&model, p.tau, None)?.generator;
    let g = gen.matrix();
    let (inner, outer) = ([0usize, 3], [1usize, 2]);
    let mut block_defect: f64 = 0.0;
    for &i in &inner {
        for &j in &outer {
            block_defect = block_defect.max(g[(i, j)].norm()).max(g[(j, i)].norm());
        }
    }
    let diagonal_block = [[g[(0, 0)], g[(0, 3)]], [g[(3, 0)], g[(3, 3)]]];
    let row_sum_defect = (g[(0, 0)] + g[(0, 3)])
        .norm()
        .max((g[(3, 0)] + g[(3, 3)]).norm());
    let delta_errors = p.is_off_diagonal().then(|| {
        let (d0, d1) = closed_form_deltas(p);
        ((g[(0, 0)] - c(d0)).norm(), (g[(3, 3)] - c(d1)).norm())
    });

    let b_norm2: f64 = p.b_matrix().iter().map(|z| z.norm_sqr()).sum();
    let mut off_diagonal = Vec::new();
    for tau in [0.1, 0.05] {
        let small = effective_generator_weak_coupling(&model, tau, None)?.generator;
        let value = small.element((0, 1), (0, 1)).re;
        let bound = -0.5 * tau * tau * p.coupling_strength() + 10.0 * tau.powi(3) * b_norm2;
        off_diagonal.push(OffDiagonalCheck {
            tau,
            value,
            bound,
            passed: value <= bound,
        });
    }
    Ok(SpinGeneratorReport {
        block_defect,
        diagonal_block,
        row_sum_defect,
        delta_errors,
        off_diagonal,
    })
}

/// `diag(delta1, delta0) / (delta0 + delta1)`.
pub fn spin_asymptotic_state(p: &SpinParams) -> Result<ComplexMatrix> {
    if p.s == 0.0 {
        return Err(Error::NoAsymptoticState(
            "S = 0 leaves the system degenerate".into(),
        ));
    }
    if p.coupling_strength() == 0.0 {
        return Err(Error::NoAsymptoticState("|b|^2 + |c|^2 = 0".into()));
    }
    let (d0, d1) = closed_form_deltas(p);
    let total = d0 + d1;
    if total == 0.0 {
        return Err(Error::NoAsymptoticState(
            "both rates vanish at this interaction time".into(),
        ));
    }
    Ok(diag(&[d1 / total, d0 / total]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{hermitian_asymmetry, max_abs};
    use crate::ris::check_h1;

    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    #[test]
    fn coupling_is_hermitian_and_h1_depends_on_diagonal() {
        let p = SpinParams::new(1.0, 2.0, 1.0, 1.0, Complex64::new(0.3, 0.7), c(2.0));
        let m = build_spin_model(&p).unwrap();
        assert_eq!(hermitian_asymmetry(m.v()), 0.0);
        assert!(check_h1(&m).holds());

        let with_a = p.with_diagonal(ONE, c(0.0));
        let m = build_spin_model(&with_a)
            .unwrap()
            .with_p0(elementary(2, 0, 0))
            .unwrap();
        let r = check_h1(&m);
        assert!(!r.holds());
        assert!(r.violations.iter().any(|v| v.contains("P0 v P0")));

        let zero = SpinParams::new(1.0, 2.0, 1.0, 1.0, c(0.0), c(0.0));
        assert_eq!(max_abs(build_spin_model(&zero).unwrap().v()), 0.0);
    }

    #[test]
    fn deltas_reference_values() {
        // evaluated independently with numpy before the build
        let (d0, d1) = closed_form_deltas(&SpinParams::new(1.0, 2.0, 1.0, 1.0, ONE, ONE));
        assert!((d0 - -0.4991011892643799).abs() < 1e-14);
        assert!((d1 - -0.8625147537994394).abs() < 1e-14);
    }

    #[test]
    fn deltas_symmetries() {
        let zero = SpinParams::new(1.0, 2.0, 1.0, 1.0, c(0.0), c(0.0));
        assert_eq!(closed_form_deltas(&zero), (0.0, 0.0));
        let hot = SpinParams::new(0.5, 1.0, 0.0, 0.5, Complex64::new(0.0, 1.0), c(2.0));
        let (d0, d1) = closed_form_deltas(&hot);
        assert!((d0 - d1).abs() < 1e-15);
        let resonant = SpinParams::new(1.0, 1.0, 1.0, 1.0, ONE, c(0.0));
        let (r0, r1) = closed_form_deltas(&resonant);
        assert!(r0 < 0.0 && r1 < 0.0);
    }

    #[test]
    fn kernel_is_continuous_at_resonance() {
        let tau = 0.7;
        let near = resonance_kernel(tau, 1e-4 / tau * 1.0001);
        let at = resonance_kernel(tau, 0.0);
        assert!((near - at).abs() < 1e-9);
        assert_eq!(at, 0.5 * tau * tau);
    }

    #[test]
    fn asymptotic_state_special_cases() {
        let hot = SpinParams::new(1.0, 2.0, 0.0, 1.0, ONE, ONE);
        let rho = spin_asymptotic_state(&hot).unwrap();
        assert!(max_abs(&(rho - diag(&[0.5, 0.5]))) < 1e-15);
        let none = SpinParams::new(1.0, 2.0, 1.0, 1.0, c(0.0), c(0.0)).with_diagonal(ONE, c(2.0));
        assert!(matches!(
            spin_asymptotic_state(&none),
            Err(Error::NoAsymptoticState(_))
        ));
        // only the exchange channel: weights (1, e^{-beta E}), ground dominated
        let exchange = SpinParams::new(1.0, 2.5, 1.0, 1.0, c(0.0), ONE);
        let rho = spin_asymptotic_state(&exchange).unwrap();
        let w = (-2.5f64).exp();
        assert!((rho[(0, 0)].re - 1.0 / (1.0 + w)).abs() < 1e-14);
    }

    #[test]
    fn generator_checks_pass_on_reference_point() {
        let r =
            closed_form_generator_checks(&SpinParams::new(1.0, 2.0, 1.0, 1.0, ONE, ONE)).unwrap();
        assert!(r.passes(1e-9), "{r:?}");
        let general = SpinParams::new(1.0, 2.0, 0.0, 1.0, ONE, ONE).with_diagonal(ONE, ONE);
        let r = closed_form_generator_checks(&general).unwrap();
        assert!(r.delta_errors.is_none());
        assert!(r.off_diagonal.iter().all(|o| o.passed), "{r:?}");
    }
}
