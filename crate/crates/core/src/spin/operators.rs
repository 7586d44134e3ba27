//! Angular-momentum operators in the |s, m⟩ basis, m descending.
//!
//! Operators are dimensionless; ⟨m|Sz|m⟩ = m and S± follow the standard
//! ladder convention S±|s,m⟩ = √(s(s+1) − m(m±1)) |s,m±1⟩.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, VbError};
use crate::linalg::CMat;

/// Cartesian spin operators for one spin of quantum number s.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub dim: usize,
    pub sx: CMat,
    pub sy: CMat,
    pub sz: CMat,
}

impl SpinOperators {
    /// Sz² (frequently needed for the zero-field-splitting term).
    pub fn sz2(&self) -> CMat {
        &self.sz * &self.sz
    }

    /// Sx² − Sy² (strain term).
    pub fn strain(&self) -> CMat {
        &self.sx * &self.sx - &self.sy * &self.sy
    }
}

/// Build {Sx, Sy, Sz} for spin quantum number `s` (2s must be a non-negative
/// integer). The basis is ordered m = s, s−1, ..., −s.
pub fn spin_operators(s: f64) -> Result<SpinOperators> {
    let two_s = 2.0 * s;
    if s < 0.0 || (two_s - two_s.round()).abs() > 1e-9 {
        return Err(VbError::Domain(format!(
            "spin quantum number must be half-integer and non-negative, got {s}"
        )));
    }
    let dim = (two_s.round() as usize) + 1;
    let m_of = |i: usize| s - i as f64;

    let mut sz = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        sz[(i, i)] = Complex64::new(m_of(i), 0.0);
    }

    // S+ has entries ⟨m+1|S+|m⟩ = √(s(s+1) − m(m+1)); with m descending that
    // couples index i+1 (lower m) up to index i.
    let mut sp = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim.saturating_sub(1) {
        let m = m_of(i + 1);
        let amp = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
        sp[(i, i + 1)] = Complex64::new(amp, 0.0);
    }
    let sm = sp.adjoint();

    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, -0.5);
    let sx = (&sp + &sm) * half;
    let sy = (&sp - &sm) * half_i;

    Ok(SpinOperators { dim, sx, sy, sz })
}
