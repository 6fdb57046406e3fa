use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linop::{
    c, eigenprojection, eigenvalues, hermitian_eigenvalues, hermitian_part, max_abs,
    smallest_singular_vectors, superop_norm, trace, trace_distance, ComplexMatrix, Superoperator,
    DEFAULT_CLUSTER_TOL,
};
use crate::ris::RISModel;
use crate::vanhove::{
    effective_generator_fast_repetition, effective_generator_weak_coupling, EffectiveGenerator,
};

/// Peripheral eigenvalues other than 1 must stay this far inside the unit
/// circle for the asymptotic state to count as unique.
pub const UNIQUENESS_TOL: f64 = 1e-9;

/// Largest power `2^j` examined by the power test of
/// [`asymptotic_periodic_state`].
const DEFAULT_MAX_POWER: u64 = 1 << 30;

/// Power-test errors below this count as converged.
pub const POWER_FLOOR: f64 = 1e-10;

/// Rounding in the unit eigenvalue doubles with every squaring, so `T^{2^j}`
/// cannot be trusted below `2^j` times this.
const ROUNDING_PER_POWER: f64 = 64.0 * f64::EPSILON;

/// Eigenvalues with `|mu| >= 1 - tol`, sorted by argument.
pub fn peripheral_spectrum(t_map: &Superoperator, tol: f64) -> Result<Vec<Complex64>> {
    let mut out: Vec<Complex64> = eigenvalues(t_map)?
        .into_iter()
        .filter(|z| z.norm() >= 1.0 - tol)
        .collect();
    out.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct LimitProjection {
    pub projection: Superoperator,
    /// Dimension of the eigenvalue-1 eigenspace.
    pub multiplicity: usize,
    /// Norm of the inverse pairing of right and left eigenvectors.
    pub condition: f64,
    /// `||T^{2^j} - P||` for `j = 0, 1, ...`, stopping once below
    /// [`POWER_FLOOR`] or the rounding level of the power.
    pub power_errors: Vec<f64>,
    /// Every other eigenvalue lies inside `|mu| < 1 - tol` and the power
    /// errors decrease monotonically.
    pub converged: bool,
}

/// Spectral projection of `t_map` at eigenvalue 1, with a power-iteration
/// cross-check up to `T^{max_power}`.
pub fn limit_projection(
    t_map: &Superoperator,
    tol: f64,
    max_power: u64,
) -> Result<LimitProjection> {
    let (p, multiplicity, condition) = eigenprojection(t_map, c(1.0), DEFAULT_CLUSTER_TOL)?;
    let projection = Superoperator::from_matrix(t_map.dim(), p)?;
    let inside = eigenvalues(t_map)?
        .iter()
        .filter(|z| (**z - c(1.0)).norm() > DEFAULT_CLUSTER_TOL)
        .all(|z| z.norm() < 1.0 - tol);

    let steps = 64 - max_power.max(1).leading_zeros() as usize;
    let mut power = t_map.clone();
    let mut power_errors = Vec::with_capacity(steps);
    for j in 0..steps {
        if j > 0 {
            power = power.compose(&power);
        }
        let err = superop_norm(&(&power - &projection));
        power_errors.push(err);
        // past this floor further squaring only amplifies rounding in the
        // unit eigenvalue
        let floor = POWER_FLOOR.max(ROUNDING_PER_POWER * (1u64 << j) as f64);
        if err <= floor {
            break;
        }
    }
    let monotone = power_errors
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    Ok(LimitProjection {
        projection,
        multiplicity,
        condition,
        power_errors,
        converged: inside && monotone,
    })
}

/// Density `rho` with `P(x) = Tr(rho x) I` read off a limit projection,
/// together with the defect of that rank-one form.
fn density_of_projection(p: &Superoperator) -> (ComplexMatrix, f64) {
    let n = p.dim();
    let m = p.matrix();
    let raw = ComplexMatrix::from_fn(n, n, |a, b| {
        (0..n).map(|i| m[(i * n + i, b * n + a)]).sum::<Complex64>() / c(n as f64)
    });
    let mut rho = hermitian_part(&raw);
    let tr = trace(&rho);
    if tr.norm() > 0.0 {
        rho /= tr;
    }
    let rank_one = ComplexMatrix::from_fn(n * n, n * n, |row, col| {
        let (k, l) = (row / n, row % n);
        let (b, a) = (col / n, col % n);
        if k == l {
            rho[(a, b)]
        } else {
            c(0.0)
        }
    });
    (rho, max_abs(&(m - rank_one)))
}

/// Unique invariant state of the Schrödinger-picture dual of `t_map`.
pub fn fixed_state(t_map: &Superoperator) -> Result<ComplexMatrix> {
    let (p, multiplicity, _) = eigenprojection(t_map, c(1.0), DEFAULT_CLUSTER_TOL)?;
    if multiplicity != 1 {
        return Err(Error::NoAsymptoticState(format!(
            "eigenvalue 1 has multiplicity {multiplicity}"
        )));
    }
    if let Some(z) = eigenvalues(t_map)?
        .iter()
        .find(|z| (**z - c(1.0)).norm() > DEFAULT_CLUSTER_TOL && z.norm() >= 1.0 - UNIQUENESS_TOL)
    {
        return Err(Error::NoAsymptoticState(format!(
            "second peripheral eigenvalue {z}"
        )));
    }
    let projection = Superoperator::from_matrix(t_map.dim(), p)?;
    Ok(density_of_projection(&projection).0)
}

#[derive(Clone, Debug)]
pub struct AsymptoticReport {
    pub peripheral_eigenvalues: Vec<Complex64>,
    pub limit_projection: Superoperator,
    pub converged: bool,
    pub is_rank_one: bool,
    /// Largest entry of `P - (x -> Tr(rho x) I)`.
    pub rank_one_defect: f64,
    pub asymptotic_density: ComplexMatrix,
    /// `(t, rho(t))` with `rho(t)` the state `x -> omega(E_S phi^t(x))`.
    pub period_samples: Vec<(f64, ComplexMatrix)>,
    /// Largest mismatch between a sample and the same sample one period
    /// later.
    pub periodicity_defect: f64,
    /// Largest deviation of a sample from a trace-one positive matrix.
    pub state_defect: f64,
}

fn state_defect(rho: &ComplexMatrix) -> f64 {
    let min = hermitian_eigenvalues(rho).first().cloned().unwrap_or(0.0);
    (trace(rho) - c(1.0)).norm().max((-min).max(0.0))
}

/// The `tau`-periodic asymptotic state of the exact dynamics at coupling
/// `lambda`, sampled at `t_samples` within one period.
pub fn asymptotic_periodic_state(
    model: &RISModel,
    lambda: f64,
    tau: f64,
    t_samples: &[f64],
) -> Result<AsymptoticReport> {
    if let Some(t) = t_samples.iter().find(|t| !(**t >= 0.0 && **t < tau)) {
        return invalid(format!("sample time {t} outside [0, {tau})"));
    }
    let t_map = model.reduced_map(lambda, tau)?;
    let peripheral = peripheral_spectrum(&t_map, UNIQUENESS_TOL)?;
    let limit = limit_projection(&t_map, UNIQUENESS_TOL, DEFAULT_MAX_POWER)?;
    if limit.multiplicity != 1 || !limit.converged {
        return Err(Error::NoAsymptoticState(format!(
            "eigenvalue 1 has multiplicity {} and {} peripheral eigenvalues",
            limit.multiplicity,
            peripheral.len()
        )));
    }
    let (rho, rank_one_defect) = density_of_projection(&limit.projection);
    let dual_t = t_map.dual();
    let mut period_samples = Vec::with_capacity(t_samples.len());
    let mut periodicity_defect: f64 = 0.0;
    let mut worst_state: f64 = 0.0;
    for &t in t_samples {
        let e_t = model.single_interval_map(lambda, t)?;
        let sample = hermitian_part(&e_t.dual().apply(&rho));
        let later = e_t.dual().apply(&dual_t.apply(&rho));
        periodicity_defect = periodicity_defect.max(max_abs(&(&later - &sample)));
        worst_state = worst_state.max(state_defect(&sample));
        period_samples.push((t, sample));
    }
    Ok(AsymptoticReport {
        peripheral_eigenvalues: peripheral,
        limit_projection: limit.projection,
        converged: limit.converged,
        is_rank_one: rank_one_defect <= 1e-9,
        rank_one_defect,
        asymptotic_density: rho,
        period_samples,
        periodicity_defect,
        state_defect: worst_state,
    })
}

#[derive(Clone, Debug)]
pub struct EffectiveState {
    /// Present when the state is unique.
    pub density: Option<ComplexMatrix>,
    pub rank_one: bool,
    pub zero_multiplicity: usize,
    /// Largest real part among the nonzero eigenvalues.
    pub leading_decay: f64,
    /// `||dual(exp(horizon gen)) rho - rho||`, zero for an invariant state.
    pub horizon_residual: f64,
}

/// Limit of `exp(s gen)` as `s -> infinity`: the state annihilated by the
/// dual generator. Unique when 0 is a simple eigenvalue and every other
/// eigenvalue has real part below `-tol`.
pub fn effective_asymptotic_state(
    gen: &EffectiveGenerator,
    tol: f64,
    horizon: f64,
) -> Result<EffectiveState> {
    let g = gen.generator.matrix();
    let n = gen.generator.dim();
    let zero_tol = DEFAULT_CLUSTER_TOL * superop_norm(&gen.generator).max(1.0);
    let spectrum = eigenvalues(g)?;
    let zero_multiplicity = spectrum.iter().filter(|z| z.norm() <= zero_tol).count();
    let leading_decay = spectrum
        .iter()
        .filter(|z| z.norm() > zero_tol)
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if zero_multiplicity > 1 {
        // a Jordan block at 0 means polynomial growth, not a limit
        eigenprojection(g, c(0.0), zero_tol)?;
    }
    let rank_one = zero_multiplicity == 1 && leading_decay < -tol;
    if !rank_one {
        return Ok(EffectiveState {
            density: None,
            rank_one,
            zero_multiplicity,
            leading_decay,
            horizon_residual: f64::NAN,
        });
    }
    let (u, _) = smallest_singular_vectors(&g.adjoint(), 1);
    let raw = ComplexMatrix::from_fn(n, n, |a, b| u[(b * n + a, 0)].conj());
    let mut rho = hermitian_part(&raw);
    let tr = trace(&rho);
    rho /= tr;
    let evolved = gen.semigroup(horizon)?.dual().apply(&rho);
    Ok(EffectiveState {
        horizon_residual: max_abs(&(evolved - &rho)),
        density: Some(rho),
        rank_one,
        zero_multiplicity,
        leading_decay,
    })
}

fn successive_ratios(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[0] / w[1]).collect()
}

#[derive(Clone, Debug)]
pub struct OrderComparison {
    /// `(parameter, trace distance)`.
    pub rows: Vec<(f64, f64)>,
    /// `distance_i / distance_{i+1}`.
    pub ratios: Vec<f64>,
    pub effective_density: ComplexMatrix,
}

fn unique_effective_state(gen: &EffectiveGenerator) -> Result<ComplexMatrix> {
    effective_asymptotic_state(gen, UNIQUENESS_TOL, 10.0)?
        .density
        .ok_or_else(|| {
            Error::NoAsymptoticState("effective generator has no unique fixed state".into())
        })
}

/// Trace distance between the exact asymptotic state (at the start of a
/// period) and the weak-coupling effective state, for each `lambda`.
pub fn compare_orders(model: &RISModel, tau: f64, lambdas: &[f64]) -> Result<OrderComparison> {
    if lambdas.is_empty() {
        return invalid("lambda grid is empty");
    }
    let gen = effective_generator_weak_coupling(model, tau, None)?;
    let effective = unique_effective_state(&gen)?;
    let rows = lambdas
        .par_iter()
        .map(|&lambda| {
            let rho = fixed_state(&model.reduced_map(lambda, tau)?)?;
            Ok((lambda, trace_distance(&rho, &effective)))
        })
        .collect::<Result<Vec<_>>>()?;
    let distances: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(OrderComparison {
        ratios: successive_ratios(&distances),
        rows,
        effective_density: effective,
    })
}

#[derive(Clone, Debug)]
pub struct ParametrizedRow {
    pub eps: f64,
    pub lambda: f64,
    pub tau: f64,
    pub distance: f64,
    pub density: ComplexMatrix,
}

/// Couplings above this are refused by [`parametrized_tau_experiment`].
const MAX_LAMBDA: f64 = 1e4;

/// Exact asymptotic states along `tau = eps^n`, `lambda = eps^{(1-n)/2}`
/// (so that `lambda^2 tau = eps`), compared with the fast-repetition
/// effective state.
pub fn parametrized_tau_experiment(
    model: &RISModel,
    n_odd: u32,
    eps_list: &[f64],
) -> Result<(Vec<ParametrizedRow>, Vec<f64>)> {
    if n_odd.is_multiple_of(2) {
        return invalid(format!("parametrization exponent {n_odd} must be odd"));
    }
    if eps_list.is_empty() {
        return invalid("eps grid is empty");
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return invalid(format!("eps = {e} must be positive"));
    }
    let gen = effective_generator_fast_repetition(model)?;
    let effective = unique_effective_state(&gen)?;
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let tau = eps.powi(n_odd as i32);
            let lambda = eps.powf((1.0 - n_odd as f64) / 2.0);
            if lambda > MAX_LAMBDA {
                return Err(Error::CostGuard(format!(
                    "coupling {lambda:e} at eps = {eps}"
                )));
            }
            let density = fixed_state(&model.reduced_map(lambda, tau)?)?;
            Ok(ParametrizedRow {
                eps,
                lambda,
                tau,
                distance: trace_distance(&density, &effective),
                density,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let distances: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    Ok((rows, successive_ratios(&distances)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{diag, identity};
    use crate::spin::{build_spin_model, SpinParams};

    fn spin(beta: f64) -> RISModel {
        build_spin_model(&SpinParams::new(1.0, 2.0, beta, 1.0, c(1.0), c(1.0))).unwrap()
    }

    #[test]
    fn toy_limit_projection() {
        let t = Superoperator::from_matrix(2, diag(&[1.0, 0.5, 0.5, 0.25])).unwrap();
        let lp = limit_projection(&t, 1e-9, 1 << 10).unwrap();
        assert!(lp.converged);
        assert!(max_abs(&(lp.projection.matrix() - diag(&[1.0, 0.0, 0.0, 0.0]))) < 1e-12);
        let p = lp.projection.clone();
        let again = limit_projection(&p, 1e-9, 16).unwrap();
        assert!(again.converged);
        assert!(max_abs(&(again.projection.matrix() - p.matrix())) < 1e-12);
    }

    #[test]
    fn free_dynamics_has_full_peripheral_spectrum() {
        let m = spin(1.0);
        let t0 = m.reduced_map(0.0, 1.0).unwrap();
        assert_eq!(peripheral_spectrum(&t0, 1e-9).unwrap().len(), 4);
        assert!(matches!(
            asymptotic_periodic_state(&m, 0.0, 1.0, &[0.0]),
            Err(Error::NoAsymptoticState(_))
        ));
        let t = m.reduced_map(0.1, 1.0).unwrap();
        let per = peripheral_spectrum(&t, 1e-9).unwrap();
        assert_eq!(per.len(), 1);
        assert!((per[0] - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn periodic_state_is_consistent() {
        let m = spin(1.0);
        let r = asymptotic_periodic_state(&m, 0.3, 1.0, &[0.0, 0.25, 0.5, 0.9]).unwrap();
        assert!(r.is_rank_one && r.converged);
        assert!(r.periodicity_defect < 1e-9);
        assert!(r.state_defect < 1e-10);
        let p = &r.limit_projection;
        assert!(max_abs(&(p.compose(p).matrix() - p.matrix())) < 1e-9);
        assert!(max_abs(&(p.apply(&identity(2)) - identity(2))) < 1e-9);
        assert!(max_abs(&(&r.period_samples[0].1 - &r.asymptotic_density)) < 1e-12);
    }

    #[test]
    fn infinite_temperature_is_balanced() {
        let m = spin(0.0);
        let r = asymptotic_periodic_state(&m, 0.2, 1.0, &[0.0]).unwrap();
        assert!(max_abs(&(r.asymptotic_density - identity(2) * c(0.5))) < 1e-9);
        let cmp = compare_orders(&m, 1.0, &[0.2, 0.1]).unwrap();
        assert!(cmp.rows.iter().all(|(_, d)| *d < 1e-9));
    }

    #[test]
    fn zero_generator_has_no_unique_state() {
        let h = diag(&[0.0, 1.0]);
        let m = RISModel::new(h.clone(), h, ComplexMatrix::zeros(4, 4), 1.0).unwrap();
        let gen = effective_generator_fast_repetition(&m).unwrap();
        let st = effective_asymptotic_state(&gen, 1e-9, 10.0).unwrap();
        assert!(!st.rank_one && st.density.is_none());
        assert_eq!(st.zero_multiplicity, 4);
    }

    #[test]
    fn parametrization_arithmetic() {
        let m = spin(1.0);
        let (rows, _) = parametrized_tau_experiment(&m, 1, &[0.2]).unwrap();
        assert_eq!(rows[0].lambda, 1.0);
        assert_eq!(rows[0].tau, 0.2);
        let (rows, _) = parametrized_tau_experiment(&m, 3, &[0.5]).unwrap();
        assert!((rows[0].lambda - 2.0).abs() < 1e-15);
        assert!((rows[0].tau - 0.125).abs() < 1e-15);
        assert!(parametrized_tau_experiment(&m, 2, &[0.5]).is_err());
    }
}
