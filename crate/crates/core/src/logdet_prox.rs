//! Proximal maps of `−log det`, with and without the spectral box `0 ⪯ Θ ⪯ R·I`.
//!
//! Both act on eigenvalues only: after `A = U M Uᵀ` the output is `U f(M) Uᵀ`.
//! The constrained map uses the quadratic weight ρ/2 and the unconstrained one
//! uses weight ρ, so `t_rho_unconstrained(A, ρ) == t_rho(A, 2ρ, ∞)`.

use crate::error::{Error, Result};
use crate::matrix::{eigendecompose, SymmetricMatrix};

/// Positive root of `d² − m·d − c/4 = 0`, i.e. `(m + √(m² + c)) / 2`, evaluated
/// without cancellation for negative `m`.
#[inline]
fn positive_root(m: f64, c: f64) -> f64 {
    let s = (m * m + c).sqrt();
    if m >= 0.0 {
        0.5 * (m + s)
    } else {
        c / (2.0 * (s - m))
    }
}

/// Scalar map of [`t_rho`]: `min((m + √(m² + 4/ρ))/2, R)`.
#[inline]
pub fn t_rho_scalar(m: f64, rho: f64, r: f64) -> f64 {
    positive_root(m, 4.0 / rho).min(r)
}

/// Scalar map of [`t_rho_unconstrained`]: `(m + √(m² + 2/ρ))/2`.
#[inline]
pub fn t_rho_unconstrained_scalar(m: f64, rho: f64) -> f64 {
    positive_root(m, 2.0 / rho)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("rho must be positive and finite, got {rho}")))
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && !r.is_nan() {
        Ok(())
    } else {
        Err(Error::Config(format!("R must be positive (or infinite), got {r}")))
    }
}

/// `argmin_Θ −log det Θ + 𝟙{0 ⪯ Θ ⪯ R·I} + (ρ/2)‖Θ − A‖²_F`.
///
/// `r` may be `f64::INFINITY` for the unconstrained limit.
pub fn t_rho(a: &SymmetricMatrix, rho: f64, r: f64) -> Result<SymmetricMatrix> {
    Ok(t_rho_with_values(a, rho, r)?.0)
}

/// As [`t_rho`], also returning the output eigenvalues (in the input's eigenvector order).
pub fn t_rho_with_values(a: &SymmetricMatrix, rho: f64, r: f64) -> Result<(SymmetricMatrix, Vec<f64>)> {
    check_rho(rho)?;
    check_radius(r)?;
    let evd = eigendecompose(a)?;
    let d: Vec<f64> = evd.values().iter().map(|&m| t_rho_scalar(m, rho, r)).collect();
    Ok((evd.with_values(&d), d))
}

/// `argmin_Θ −log det Θ + ρ‖Θ − A‖²_F = ½(A + (A² + (2/ρ)I)^{1/2})`.
pub fn t_rho_unconstrained(a: &SymmetricMatrix, rho: f64) -> Result<SymmetricMatrix> {
    Ok(t_rho_unconstrained_with_values(a, rho)?.0)
}

pub fn t_rho_unconstrained_with_values(a: &SymmetricMatrix, rho: f64) -> Result<(SymmetricMatrix, Vec<f64>)> {
    check_rho(rho)?;
    let evd = eigendecompose(a)?;
    let d: Vec<f64> = evd
        .values()
        .iter()
        .map(|&m| t_rho_unconstrained_scalar(m, rho))
        .collect();
    Ok((evd.with_values(&d), d))
}
