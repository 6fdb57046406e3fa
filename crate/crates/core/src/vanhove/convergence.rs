use rayon::prelude::*;

use super::{
    effective_generator_fast_repetition, effective_generator_weak_coupling, EffectiveGenerator,
    Regime,
};
use crate::error::{invalid, Error, Result};
use crate::linop::{superop_norm, Superoperator};
use crate::ris::RISModel;

/// Largest number of interaction periods a sweep may need.
pub const MAX_ITERATIONS: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub parameter: f64,
    pub s: f64,
    pub error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRatio {
    pub from: f64,
    pub to: f64,
    /// `sup_error(from) / sup_error(to)`.
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub regime: Regime,
    /// Sorted by `(parameter, s)`.
    pub rows: Vec<ConvergenceRow>,
    /// `(parameter, sup_s error)` in the order the parameters were given.
    pub sup_errors: Vec<(f64, f64)>,
    pub decay_ratios: Vec<DecayRatio>,
}

impl ConvergenceReport {
    fn assemble(regime: Regime, per_parameter: Vec<(f64, Vec<ConvergenceRow>)>) -> Self {
        let sup_errors: Vec<(f64, f64)> = per_parameter
            .iter()
            .map(|(p, rows)| (*p, rows.iter().map(|r| r.error).fold(0.0, f64::max)))
            .collect();
        let decay_ratios = sup_errors
            .windows(2)
            .map(|w| DecayRatio {
                from: w[0].0,
                to: w[1].0,
                ratio: w[0].1 / w[1].1,
            })
            .collect();
        let mut rows: Vec<ConvergenceRow> =
            per_parameter.into_iter().flat_map(|(_, r)| r).collect();
        rows.sort_by(|a, b| {
            a.parameter
                .total_cmp(&b.parameter)
                .then(a.s.total_cmp(&b.s))
        });
        Self {
            regime,
            rows,
            sup_errors,
            decay_ratios,
        }
    }

    pub fn sup_error(&self, parameter: f64) -> Option<f64> {
        self.sup_errors
            .iter()
            .find(|(p, _)| *p == parameter)
            .map(|(_, e)| *e)
    }
}

fn s_grid(s_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(s_max >= 0.0) || !s_max.is_finite() {
        return invalid(format!("s_max = {s_max}"));
    }
    match steps {
        0 => invalid("s grid needs at least one point"),
        1 => Ok(vec![s_max]),
        _ => Ok((0..steps)
            .map(|j| s_max * j as f64 / (steps - 1) as f64)
            .collect()),
    }
}

fn guard(periods: f64) -> Result<()> {
    if periods > MAX_ITERATIONS {
        return Err(Error::CostGuard(format!(
            "{periods:e} interaction periods exceed {MAX_ITERATIONS:e}"
        )));
    }
    Ok(())
}

/// Powers of a fixed map along a nondecreasing sequence of exponents,
/// each step reusing the previous power.
struct PowerWalk {
    base: Superoperator,
    power: Superoperator,
    exponent: u64,
}

impl PowerWalk {
    fn new(base: Superoperator) -> Self {
        let dim = base.dim();
        Self {
            base,
            power: Superoperator::identity(dim),
            exponent: 0,
        }
    }

    fn advance_to(&mut self, m: u64) -> &Superoperator {
        debug_assert!(m >= self.exponent);
        if m > self.exponent {
            self.power = self.power.compose(&self.base.pow(m - self.exponent));
            self.exponent = m;
        }
        &self.power
    }
}

fn check_positive(values: &[f64], name: &str) -> Result<()> {
    if values.is_empty() {
        return invalid(format!("{name} grid is empty"));
    }
    if let Some(x) = values.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return invalid(format!("{name} value {x} must be positive"));
    }
    Ok(())
}

/// Lattice sweep: `T^m alpha_S^{-m tau}` against the weak-coupling semigroup
/// at `m = floor(s / (lambda^2 tau))`.
pub fn converge_lambda(
    model: &RISModel,
    tau: f64,
    lambdas: &[f64],
    s_max: f64,
    s_steps: usize,
) -> Result<ConvergenceReport> {
    let generator = effective_generator_weak_coupling(model, tau, None)?;
    converge_lambda_with(model, &generator, tau, lambdas, s_max, s_steps)
}

pub(crate) fn lattice_index(s: f64, lambda: f64, tau: f64) -> u64 {
    let q = s / (lambda * lambda * tau);
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        q.floor() as u64
    }
}

fn converge_lambda_with(
    model: &RISModel,
    generator: &EffectiveGenerator,
    tau: f64,
    lambdas: &[f64],
    s_max: f64,
    s_steps: usize,
) -> Result<ConvergenceReport> {
    check_positive(lambdas, "lambda")?;
    let grid = s_grid(s_max, s_steps)?;
    for &lambda in lambdas {
        guard(s_max / (lambda * lambda * tau))?;
    }
    let per_parameter = lambdas
        .par_iter()
        .map(|&lambda| -> Result<(f64, Vec<ConvergenceRow>)> {
            let mut walk = PowerWalk::new(model.reduced_map(lambda, tau)?);
            let mut rows = Vec::with_capacity(grid.len());
            for &s in &grid {
                let m = lattice_index(s, lambda, tau);
                let back = model.free_small_dynamics(-(m as f64) * tau)?;
                let exact = walk.advance_to(m).compose(&back);
                let error = superop_norm(&(&exact - &generator.semigroup(s)?));
                rows.push(ConvergenceRow {
                    parameter: lambda,
                    s,
                    error,
                });
            }
            Ok((lambda, rows))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport::assemble(
        Regime::WeakCoupling,
        per_parameter,
    ))
}

/// `phi_res^t alpha_S^{-t}` at `t = s / lambda^2`, typically off the lattice
/// of whole periods, against the weak-coupling semigroup.
pub fn converge_lambda_interpolated(
    model: &RISModel,
    tau: f64,
    lambdas: &[f64],
    s_max: f64,
    s_steps: usize,
) -> Result<ConvergenceReport> {
    let generator = effective_generator_weak_coupling(model, tau, None)?;
    check_positive(lambdas, "lambda")?;
    let grid = s_grid(s_max, s_steps)?;
    let pairs: Vec<(f64, f64)> = lambdas.iter().map(|&l| (l, tau)).collect();
    let per_parameter = restricted_sweep(model, &generator, &pairs, &grid, |s, lambda, _| {
        s / (lambda * lambda)
    })?;
    let per_parameter = per_parameter
        .into_iter()
        .zip(lambdas)
        .map(|((_, rows), &l)| (l, relabel(rows, l)))
        .collect();
    Ok(ConvergenceReport::assemble(
        Regime::WeakCoupling,
        per_parameter,
    ))
}

/// `phi_res^t alpha_S^{-t}` at `t = s / (lambda^2 tau)` against the
/// fast-repetition semigroup, one row group per `(lambda, tau)` pair; the
/// reported parameter is `tau`.
pub fn converge_tau(
    model: &RISModel,
    pairs: &[(f64, f64)],
    s_max: f64,
    s_steps: usize,
) -> Result<ConvergenceReport> {
    let generator = effective_generator_fast_repetition(model)?;
    let lambdas: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let taus: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    check_positive(&lambdas, "lambda")?;
    check_positive(&taus, "tau")?;
    let grid = s_grid(s_max, s_steps)?;
    let per_parameter = restricted_sweep(model, &generator, pairs, &grid, |s, lambda, tau| {
        s / (lambda * lambda * tau)
    })?;
    Ok(ConvergenceReport::assemble(
        Regime::FastRepetition,
        per_parameter,
    ))
}

fn relabel(rows: Vec<ConvergenceRow>, parameter: f64) -> Vec<ConvergenceRow> {
    rows.into_iter()
        .map(|r| ConvergenceRow { parameter, ..r })
        .collect()
}

/// Shared body of the off-lattice sweeps. Rows are labelled by `tau`.
fn restricted_sweep(
    model: &RISModel,
    generator: &EffectiveGenerator,
    pairs: &[(f64, f64)],
    grid: &[f64],
    time_of: impl Fn(f64, f64, f64) -> f64 + Sync,
) -> Result<Vec<(f64, Vec<ConvergenceRow>)>> {
    let s_max = grid.iter().cloned().fold(0.0, f64::max);
    for &(lambda, tau) in pairs {
        guard(time_of(s_max, lambda, tau) / tau)?;
    }
    pairs
        .par_iter()
        .map(|&(lambda, tau)| -> Result<(f64, Vec<ConvergenceRow>)> {
            let mut walk = PowerWalk::new(model.reduced_map(lambda, tau)?);
            let mut rows = Vec::with_capacity(grid.len());
            for &s in grid {
                let t = time_of(s, lambda, tau);
                let (n, t1) = crate::ris::split_time(t, tau);
                let partial = model.single_interval_map(lambda, t1)?;
                let back = model.free_small_dynamics(-t)?;
                let exact = walk.advance_to(n).compose(&partial).compose(&back);
                let error = superop_norm(&(&exact - &generator.semigroup(s)?));
                rows.push(ConvergenceRow {
                    parameter: tau,
                    s,
                    error,
                });
            }
            Ok((tau, rows))
        })
        .collect()
}
