//! Hermite and Charlier polynomial tables.
//!
//! Hermite polynomials use the generating-function normalization
//!
//! ```text
//! exp(x t - t^2/2) = sum_m K_m(x) t^m
//! ```
//!
//! so `K_m = He_m / m!` where `He_m` is the probabilists' Hermite polynomial,
//! `K_m' = K_{m-1}` and `sqrt(m!) K_m` is orthonormal under N(0, 1). Dividing
//! the classical recurrence `He_{m+1} = x He_m - m He_{m-1}` by `(m+1)!` gives
//!
//! ```text
//! K_{m+1}(x) = (x K_m(x) - K_{m-1}(x)) / (m + 1)
//! ```
//!
//! Charlier polynomials `C_m(x, t)` follow
//! `C_{m+1} = (x - m - t) C_m - m t C_{m-1}` with `C_0 = 1`, `C_1 = x - t`;
//! they are orthogonal under Poisson(t) with `E[C_m^2] = m! t^m`.

use crate::error::{Error, Result};

/// Highest polynomial degree any table may request.
pub const MAX_DEGREE: usize = 60;

/// Values of one polynomial family at a fixed point, indexed by degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTable {
    values: Vec<f64>,
}

impl PolyTable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, degree: usize) -> f64 {
        self.values[degree]
    }

    pub fn max_degree(&self) -> usize {
        self.values.len() - 1
    }
}

fn check_degree(m_max: usize) -> Result<()> {
    if m_max > MAX_DEGREE {
        return Err(Error::DegreeTooLarge {
            degree: m_max,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// `K_0(x), ..., K_{m_max}(x)`.
pub fn hermite_upto(m_max: usize, x: f64) -> Result<PolyTable> {
    check_degree(m_max)?;
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("hermite argument {x}")));
    }
    let mut values = vec![0.0; m_max + 1];
    fill_hermite(x, &mut values);
    Ok(PolyTable { values })
}

/// `C_0(x, t), ..., C_{m_max}(x, t)`.
pub fn charlier_upto(m_max: usize, x: f64, t: f64) -> Result<PolyTable> {
    check_degree(m_max)?;
    if !x.is_finite() || !t.is_finite() {
        return Err(Error::NonFinite(format!("charlier arguments x = {x}, t = {t}")));
    }
    if t < 0.0 {
        return Err(Error::invalid(format!("charlier parameter must be >= 0, got {t}")));
    }
    let mut values = vec![0.0; m_max + 1];
    fill_charlier(x, t, &mut values);
    Ok(PolyTable { values })
}

/// Fills `out[m] = K_m(x)` for `m < out.len()`. No argument checks.
#[inline]
pub(crate) fn fill_hermite(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for m in 1..out.len().saturating_sub(1) {
        out[m + 1] = (x * out[m] - out[m - 1]) / (m + 1) as f64;
    }
}

/// Fills `out[m] = C_m(x, t)` for `m < out.len()`. No argument checks.
#[inline]
pub(crate) fn fill_charlier(x: f64, t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x - t;
    }
    for m in 1..out.len().saturating_sub(1) {
        let mf = m as f64;
        out[m + 1] = (x - mf - t) * out[m] - mf * t * out[m - 1];
    }
}
