//! Weak-coupling (van Hove) effective dynamics.
//!
//! Two regimes are covered. In the first the coupling vanishes at fixed
//! interaction time, `lambda -> 0`, and the slow generator is the spectral
//! average of the second Dyson term with respect to the free logarithm `A0`.
//! In the second the interaction time vanishes with `lambda^2 tau -> 0`, and
//! the generator is half the averaged square of `[v, .]` with respect to
//! `delta_S`.

mod convergence;
mod generator;

pub use convergence::{
    converge_lambda, converge_lambda_interpolated, converge_tau, ConvergenceReport, ConvergenceRow,
    DecayRatio, MAX_ITERATIONS,
};
pub use generator::{
    effective_generator_fast_repetition, effective_generator_weak_coupling, log_generator_a0,
    second_order_term, spectral_average, EffectiveGenerator, LogGenerator, Regime,
};
