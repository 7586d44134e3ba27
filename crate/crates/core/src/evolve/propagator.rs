//! Unitary propagators from Hermitian eigendecomposition.

use num_complex::Complex64;

use crate::error::{Result, VbError};
use crate::linalg::{eye, is_hermitian, CMat};

/// U = exp(−i·2π·H·dt) for H/h in MHz and dt in µs.
///
/// Computed by diagonalising H (Hermitian within 1e−12 relative norm is
/// required) and exponentiating the eigenvalues, so the result is unitary
/// to machine precision for any step size.
pub fn propagator(h: &CMat, dt_us: f64) -> Result<CMat> {
    if !is_hermitian(h, 1e-12) {
        return Err(VbError::Domain(
            "propagator requires a Hermitian generator".into(),
        ));
    }
    if dt_us == 0.0 {
        return Ok(eye(h.nrows()));
    }
    let eig = h.clone().symmetric_eigen();
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lambda| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * lambda * dt_us))
        .collect();
    // U = V · diag(e^{−i2πλdt}) · V†
    let mut scaled = eig.eigenvectors.clone();
    for (c, phase) in phases.iter().enumerate() {
        for r in 0..scaled.nrows() {
            scaled[(r, c)] *= phase;
        }
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}

/// ρ → U ρ U†.
pub fn apply_unitary(rho: &CMat, u: &CMat) -> CMat {
    u * rho * u.adjoint()
}
