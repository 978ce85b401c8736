//! Truncated Wiener-Poisson chaos: basis enumeration, Monte Carlo
//! coefficient estimation and evaluation of conditional expectations.

mod coefficients;
pub mod eval;
mod index;
mod tables;

pub use coefficients::{
    estimate, estimate_with, estimate_with_moments, variance_diagnostic, ChaosCoefficients, MomentEstimate,
};
pub use eval::{conditional, conditional_at, malliavin_b, malliavin_p, GridEvaluator, TripleValue};
pub use index::{
    basis_size, enumerate_indices, enumerate_indices_capped, weight, Basis, Factor, MultiIndex, DEFAULT_INDEX_CAP,
};
