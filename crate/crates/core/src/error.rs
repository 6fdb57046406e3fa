use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{what} is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { what: String, asymmetry: f64 },

    #[error("matrix is not normal (||AA^+ - A^+A|| = {defect:e})")]
    NotNormal { defect: f64 },

    #[error("superoperator is not unitary (||U^+U - I|| = {defect:e})")]
    NotUnitary { defect: f64 },

    #[error(
        "eigenvalue {eigenvalue} lies {distance:e} rad from the branch cut at {cut}; \
         the largest spectral gap is bisected by {suggested_cut}"
    )]
    BranchCut {
        eigenvalue: Complex64,
        cut: f64,
        distance: f64,
        suggested_cut: f64,
    },

    #[error("eigenvalue {eigenvalue} is defective (residual {residual:e} for multiplicity {multiplicity})")]
    Defective {
        eigenvalue: Complex64,
        multiplicity: usize,
        residual: f64,
    },

    #[error("no unique asymptotic state: {0}")]
    NoAsymptoticState(String),

    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unstable extrapolation: {0}")]
    UnstableExtrapolation(String),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
