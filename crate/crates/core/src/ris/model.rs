use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linop::{
    c, ensure_hermitian, hermitian_eigenvalues, identity, kron, max_abs, trace, ComplexMatrix,
    Superoperator,
};

/// Largest accepted `n_S * n_E`; superoperators on the full space are
/// `(n_S n_E)^2` square.
pub const MAX_FULL_DIM: usize = 64;

/// Density matrix of one chain element.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    rho: ComplexMatrix,
}

impl ChainState {
    /// Accepts a Hermitian, trace-one, positive semidefinite matrix (all to
    /// `1e-12`).
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        ensure_hermitian(&rho, "chain state")?;
        let tr = trace(&rho);
        if (tr - c(1.0)).norm() > 1e-12 {
            return invalid(format!("chain state has trace {tr}"));
        }
        let min = hermitian_eigenvalues(&rho).first().cloned().unwrap_or(0.0);
        if min < -1e-12 {
            return invalid(format!("chain state has negative eigenvalue {min:e}"));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// `omega(x) = Tr(rho x)`.
    pub fn expectation(&self, x: &ComplexMatrix) -> Complex64 {
        trace(&(&self.rho * x))
    }
}

/// Gibbs state `e^{-beta h} / Tr e^{-beta h}`, evaluated with the ground
/// energy subtracted so that large `beta` never overflows.
pub fn gibbs_state(h: &ComplexMatrix, beta: f64) -> Result<ChainState> {
    ensure_hermitian(h, "chain Hamiltonian")?;
    if !(beta >= 0.0) || !beta.is_finite() {
        return invalid(format!("inverse temperature {beta}"));
    }
    let eig = crate::linop::hermitian_part(h).symmetric_eigen();
    let ground = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|e| (-beta * (e - ground)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let n = h.nrows();
    let u = &eig.eigenvectors;
    let rho = ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| u[(i, k)] * u[(j, k)].conj() * (weights[k] / z))
            .sum()
    });
    ChainState::new(crate::linop::hermitian_part(&rho))
}

/// The conditional expectation `E_S` split into its two halves:
/// `reduce: x -> Tr_E((I (x) rho) x)` from the full space to `M_S`, and
/// `embed: x_S -> x_S (x) I`. `E_S` itself is `embed * reduce`.
#[derive(Clone, Debug)]
pub struct ConditionalExpectation {
    n_s: usize,
    n_e: usize,
    reduce: ComplexMatrix,
    embed: ComplexMatrix,
}

impl ConditionalExpectation {
    pub fn new(n_s: usize, state: &ChainState) -> Self {
        let n_e = state.dim();
        let n = n_s * n_e;
        let rho = state.rho();
        let mut reduce = ComplexMatrix::zeros(n_s * n_s, n * n);
        let mut embed = ComplexMatrix::zeros(n * n, n_s * n_s);
        for i in 0..n_s {
            for j in 0..n_s {
                for a in 0..n_e {
                    for b in 0..n_e {
                        let full = (i * n_e + b) * n + (j * n_e + a);
                        reduce[(i * n_s + j, full)] = rho[(a, b)];
                        if a == b {
                            embed[(full, i * n_s + j)] = c(1.0);
                        }
                    }
                }
            }
        }
        Self {
            n_s,
            n_e,
            reduce,
            embed,
        }
    }

    pub fn reduce_matrix(&self) -> &ComplexMatrix {
        &self.reduce
    }

    pub fn embed_matrix(&self) -> &ComplexMatrix {
        &self.embed
    }

    /// `E_S` as a superoperator on the full space.
    pub fn as_superoperator(&self) -> Superoperator {
        Superoperator::from_matrix_unchecked(self.n_s * self.n_e, &self.embed * &self.reduce)
    }

    /// `x_S -> reduce(s(x_S (x) I))`, the restriction of a full-space map to
    /// the small system.
    pub fn restrict(&self, s: &Superoperator) -> Superoperator {
        assert_eq!(
            s.dim(),
            self.n_s * self.n_e,
            "restricting a map of the wrong size"
        );
        Superoperator::from_matrix_unchecked(self.n_s, &self.reduce * s.matrix() * &self.embed)
    }

    /// Partial expectation of a full-space observable, as an `n_S x n_S` matrix.
    pub fn reduce(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = &self.reduce * crate::linop::vectorize(x);
        crate::linop::unvectorize(&v, self.n_s)
    }

    pub fn embed(&self, x_s: &ComplexMatrix) -> ComplexMatrix {
        kron(x_s, &identity(self.n_e))
    }
}

/// A repeated-interaction system: small system `h_S`, chain element `h_E`
/// in its Gibbs state at inverse temperature `beta`, coupling operator `v`.
#[derive(Clone, Debug)]
pub struct RISModel {
    h_s: ComplexMatrix,
    h_e: ComplexMatrix,
    v: ComplexMatrix,
    beta: f64,
    p0: Option<ComplexMatrix>,
    state: ChainState,
    expectation: ConditionalExpectation,
    free_full: Superoperator,
    coupling: Superoperator,
    delta_s: Superoperator,
}

impl RISModel {
    pub fn new(
        h_s: ComplexMatrix,
        h_e: ComplexMatrix,
        v: ComplexMatrix,
        beta: f64,
    ) -> Result<Self> {
        ensure_hermitian(&h_s, "h_S")?;
        ensure_hermitian(&h_e, "h_E")?;
        ensure_hermitian(&v, "v")?;
        let (n_s, n_e) = (h_s.nrows(), h_e.nrows());
        if n_s == 0 || n_e == 0 {
            return Err(Error::Dimension("empty Hilbert space".into()));
        }
        let n = n_s * n_e;
        if n > MAX_FULL_DIM {
            return Err(Error::CostGuard(format!(
                "full dimension {n} exceeds the cap {MAX_FULL_DIM}"
            )));
        }
        if v.nrows() != n {
            return Err(Error::Dimension(format!(
                "v is {}x{}, expected {n}x{n}",
                v.nrows(),
                v.ncols()
            )));
        }
        let state = gibbs_state(&h_e, beta)?;
        let expectation = ConditionalExpectation::new(n_s, &state);
        let h_full = kron(&h_s, &identity(n_e)) + kron(&identity(n_s), &h_e);
        let free_full = Superoperator::derivation(&h_full)?;
        let delta_s = Superoperator::derivation(&h_s)?;
        let coupling = Superoperator::commutator(&v);
        Ok(Self {
            h_s,
            h_e,
            v,
            beta,
            p0: None,
            state,
            expectation,
            free_full,
            coupling,
            delta_s,
        })
    }

    /// Attaches the chain projection `p0` used by the parity hypothesis.
    /// `p0` must be an orthogonal projection commuting with `h_E`.
    pub fn with_p0(mut self, p0: ComplexMatrix) -> Result<Self> {
        if p0.nrows() != self.n_e() || p0.ncols() != self.n_e() {
            return Err(Error::Dimension(format!(
                "p0 is {}x{}, expected {}x{}",
                p0.nrows(),
                p0.ncols(),
                self.n_e(),
                self.n_e()
            )));
        }
        ensure_hermitian(&p0, "p0")?;
        let idem = max_abs(&(&p0 * &p0 - &p0));
        if idem > 1e-12 {
            return invalid(format!("p0 is not idempotent (defect {idem:e})"));
        }
        let comm = max_abs(&(&self.h_e * &p0 - &p0 * &self.h_e));
        if comm > 1e-12 * max_abs(&self.h_e).max(1.0) {
            return invalid(format!("p0 does not commute with h_E (defect {comm:e})"));
        }
        self.p0 = Some(p0);
        Ok(self)
    }

    pub fn n_s(&self) -> usize {
        self.h_s.nrows()
    }

    pub fn n_e(&self) -> usize {
        self.h_e.nrows()
    }

    pub fn h_s(&self) -> &ComplexMatrix {
        &self.h_s
    }

    pub fn h_e(&self) -> &ComplexMatrix {
        &self.h_e
    }

    pub fn v(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p0(&self) -> Option<&ComplexMatrix> {
        self.p0.as_ref()
    }

    pub fn chain_state(&self) -> &ChainState {
        &self.state
    }

    pub fn conditional_expectation(&self) -> &ConditionalExpectation {
        &self.expectation
    }

    /// `delta_S + delta_E` on the full space.
    pub fn free_generator(&self) -> &Superoperator {
        &self.free_full
    }

    /// `[v, .]` on the full space.
    pub fn coupling(&self) -> &Superoperator {
        &self.coupling
    }

    /// `delta_S` on `M_S`.
    pub fn delta_s(&self) -> &Superoperator {
        &self.delta_s
    }

    /// Free small-system evolution `alpha_S^t`.
    pub fn free_small_dynamics(&self, t: f64) -> Result<Superoperator> {
        self.delta_s.exp_scaled(t)
    }

    /// Free evolution `alpha_SE^t` of the coupled space.
    pub fn free_full_dynamics(&self, t: f64) -> Result<Superoperator> {
        self.free_full.exp_scaled(t)
    }

    pub(crate) fn full_hamiltonian(&self) -> ComplexMatrix {
        kron(&self.h_s, &identity(self.n_e())) + kron(&identity(self.n_s()), &self.h_e)
    }
}
