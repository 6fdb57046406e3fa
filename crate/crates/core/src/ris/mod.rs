//! The repeated-interaction model and its exact dynamics.
//!
//! Everything is in the Heisenberg picture: maps act on observables. The
//! full space is `M_S (x) M_E` with index `(i, a) -> i * n_E + a`.

mod dynamics;
mod dyson;
mod h1;
mod model;

pub use dyson::{dyson_term, dyson_term_quadrature, dyson_truncation_bound, gauss_legendre};
pub use h1::{check_h1, H1Report, H1Status};
pub use model::{gibbs_state, ChainState, ConditionalExpectation, RISModel, MAX_FULL_DIM};

pub(crate) use dynamics::split_time;
