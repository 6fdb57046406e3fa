//! Long-time behaviour: peripheral spectra, limit projections, periodic
//! asymptotic states and the perturbative structure of the eigenvalue-1
//! projection near vanishing coupling.

mod kato;
mod states;

pub use kato::{kato_structure_check, KatoReport};
pub use states::{
    asymptotic_periodic_state, compare_orders, effective_asymptotic_state, fixed_state,
    limit_projection, parametrized_tau_experiment, peripheral_spectrum, AsymptoticReport,
    EffectiveState, LimitProjection, OrderComparison, ParametrizedRow, POWER_FLOOR, UNIQUENESS_TOL,
};
