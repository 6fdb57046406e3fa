use num_complex::Complex64;

use super::RISModel;
use crate::error::{invalid, Result};
use crate::linop::Superoperator;

/// `t / tau` values this close to an integer are treated as that integer.
const LATTICE_SNAP: f64 = 1e-9;

/// Splits `t = n tau + t1` with `0 <= t1 < tau`.
pub(crate) fn split_time(t: f64, tau: f64) -> (u64, f64) {
    let q = t / tau;
    let rounded = q.round();
    if (q - rounded).abs() <= LATTICE_SNAP {
        (rounded as u64, 0.0)
    } else {
        let n = q.floor();
        (n as u64, (t - n * tau).max(0.0))
    }
}

impl RISModel {
    /// `delta_S + delta_E + i lambda [v, .]`.
    pub fn full_generator(&self, lambda: f64) -> Superoperator {
        self.free_generator() + &self.coupling().scale(Complex64::new(0.0, lambda))
    }

    /// Coupled evolution `phi_SE^t = exp(t * full_generator(lambda))`.
    pub fn interaction_dynamics(&self, lambda: f64, t: f64) -> Result<Superoperator> {
        self.full_generator(lambda).exp_scaled(t)
    }

    /// Map for one interaction lasting `t1`, seen by the small system:
    /// `x_S -> E_S(phi_SE^{t1}(x_S (x) I))`.
    pub fn single_interval_map(&self, lambda: f64, t1: f64) -> Result<Superoperator> {
        if t1 == 0.0 {
            return Ok(Superoperator::identity(self.n_s()));
        }
        let phi = self.interaction_dynamics(lambda, t1)?;
        Ok(self.conditional_expectation().restrict(&phi))
    }

    /// One full period, `T(lambda, tau)`.
    pub fn reduced_map(&self, lambda: f64, tau: f64) -> Result<Superoperator> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return invalid(format!("interaction time {tau}"));
        }
        self.single_interval_map(lambda, tau)
    }

    /// Small-system evolution up to time `t`: `T^n` after the partial
    /// interaction of length `t1`, where `t = n tau + t1`.
    pub fn restricted_dynamics(&self, lambda: f64, tau: f64, t: f64) -> Result<Superoperator> {
        if !(tau > 0.0) || !tau.is_finite() {
            return invalid(format!("interaction time {tau}"));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return invalid(format!("time {t}"));
        }
        let (n, t1) = split_time(t, tau);
        let partial = self.single_interval_map(lambda, t1)?;
        if n == 0 {
            return Ok(partial);
        }
        Ok(self.reduced_map(lambda, tau)?.pow(n).compose(&partial))
    }

    /// Same as [`RISModel::restricted_dynamics`] given a precomputed
    /// `T(lambda, tau)`, reusing it across many times.
    pub fn restricted_dynamics_with(
        &self,
        t_map: &Superoperator,
        lambda: f64,
        tau: f64,
        t: f64,
    ) -> Result<Superoperator> {
        let (n, t1) = split_time(t, tau);
        let partial = self.single_interval_map(lambda, t1)?;
        Ok(t_map.pow(n).compose(&partial))
    }
}
