use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::linop::{
    c, eigenvalues, largest_gap_bisector, matrix_log_unitary, spectral_decompose, Normality,
    SpectralDecomposition, Superoperator, DEFAULT_CLUSTER_TOL,
};
use crate::ris::{dyson_term, RISModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `lambda -> 0` at fixed `tau`.
    WeakCoupling,
    /// `tau -> 0` with `lambda^2 tau -> 0`.
    FastRepetition,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::WeakCoupling => "weak-coupling",
            Regime::FastRepetition => "fast-repetition",
        }
    }
}

/// `sum_k P_k b P_k` over the projections of `basis`.
pub fn spectral_average(b: &Superoperator, basis: &SpectralDecomposition) -> Result<Superoperator> {
    let n2 = b.matrix().nrows();
    if basis.dim() != n2 {
        return Err(Error::Dimension(format!(
            "averaging a {n2}x{n2} map over projections of size {}",
            basis.dim()
        )));
    }
    let mut acc = crate::linop::zeros(n2, n2);
    for p in basis.projections() {
        acc += p * b.matrix() * p;
    }
    Superoperator::from_matrix(b.dim(), acc)
}

/// A branch of `log alpha_S^tau` and the cut it was taken with.
#[derive(Clone, Debug)]
pub struct LogGenerator {
    pub a0: Superoperator,
    pub branch_cut_angle: f64,
}

/// `A0` with `exp(A0) = alpha_S^tau`. Without an explicit cut the bisector
/// of the largest angular gap of the spectrum is used.
pub fn log_generator_a0(model: &RISModel, tau: f64, cut: Option<f64>) -> Result<LogGenerator> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return invalid(format!("interaction time {tau}"));
    }
    let n = model.n_s();
    if tau == 0.0 {
        return Ok(LogGenerator {
            a0: Superoperator::zero(n),
            branch_cut_angle: cut.unwrap_or(PI),
        });
    }
    let alpha = model.free_small_dynamics(tau)?;
    let angle = match cut {
        Some(a) => a,
        None => largest_gap_bisector(&eigenvalues(&alpha)?),
    };
    Ok(LogGenerator {
        a0: matrix_log_unitary(&alpha, angle)?,
        branch_cut_angle: angle,
    })
}

/// `E_S phi_2^tau` restricted to the small system.
pub fn second_order_term(model: &RISModel, tau: f64) -> Result<Superoperator> {
    if !(tau > 0.0) || !tau.is_finite() {
        return invalid(format!("interaction time {tau}"));
    }
    let phi2 = dyson_term(model, 2, tau)?;
    Ok(model.conditional_expectation().restrict(&phi2))
}

/// A slow generator on `M_S` together with the spectral basis it is
/// averaged over.
///
/// `time_scale` converts rescaled time into generator time:
/// [`EffectiveGenerator::semigroup`] is `exp(s * time_scale * generator)`.
/// It is `1 / tau` in the weak-coupling regime, where `generator` is the
/// per-period quantity, and 1 in the fast-repetition regime.
#[derive(Clone, Debug)]
pub struct EffectiveGenerator {
    pub regime: Regime,
    pub generator: Superoperator,
    pub averaging_basis: SpectralDecomposition,
    pub branch_cut_angle: Option<f64>,
    pub time_scale: f64,
}

impl EffectiveGenerator {
    pub fn semigroup(&self, s: f64) -> Result<Superoperator> {
        self.generator.exp_scaled(s * self.time_scale)
    }

    /// Largest `||[P_k, generator]||` over the averaging projections.
    pub fn commutation_defect(&self) -> f64 {
        self.averaging_basis
            .projections()
            .map(|p| {
                let g = self.generator.matrix();
                crate::linop::max_abs(&(p * g - g * p))
            })
            .fold(0.0, f64::max)
    }
}

/// `-(E_S phi_2^tau)` averaged over the spectral projections of `A0`.
pub fn effective_generator_weak_coupling(
    model: &RISModel,
    tau: f64,
    cut: Option<f64>,
) -> Result<EffectiveGenerator> {
    if !(tau > 0.0) {
        return invalid(format!("interaction time {tau}"));
    }
    let log = log_generator_a0(model, tau, cut)?;
    let basis = spectral_decompose(&log.a0, DEFAULT_CLUSTER_TOL, Normality::Normal)?;
    let averaged = spectral_average(&second_order_term(model, tau)?, &basis)?;
    Ok(EffectiveGenerator {
        regime: Regime::WeakCoupling,
        generator: -&averaged,
        averaging_basis: basis,
        branch_cut_angle: Some(log.branch_cut_angle),
        time_scale: 1.0 / tau,
    })
}

/// `-(1/2) (E_S [v, .]^2)` averaged over the spectral projections of
/// `delta_S`.
pub fn effective_generator_fast_repetition(model: &RISModel) -> Result<EffectiveGenerator> {
    let basis = spectral_decompose(model.delta_s(), DEFAULT_CLUSTER_TOL, Normality::Normal)?;
    let square = model.coupling().compose(model.coupling());
    let restricted = model.conditional_expectation().restrict(&square);
    let averaged = spectral_average(&restricted, &basis)?;
    Ok(EffectiveGenerator {
        regime: Regime::FastRepetition,
        generator: averaged.scale(c(-0.5)),
        averaging_basis: basis,
        branch_cut_angle: None,
        time_scale: 1.0,
    })
}
