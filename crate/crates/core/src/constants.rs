//! Physical constants and unit conventions.
//!
//! All Hamiltonians in this crate are stored as H/h in MHz, times in µs,
//! magnetic fields in mT and microwave powers in mW. With MHz·µs = 1 the
//! factor 2π appears only inside propagators, never in matrix elements,
//! so every number in a Hamiltonian is directly a transition frequency.

/// Planck constant, J·s (exact, 2019 SI).
pub const PLANCK_H: f64 = 6.626_070_15e-34;

/// Bohr magneton divided by Planck constant, GHz/T.
///
/// Numerically identical in MHz/mT, which is the form used throughout:
/// the electron Zeeman shift is `g * BOHR_MAGNETON_OVER_H * B_mT` MHz.
pub const BOHR_MAGNETON_OVER_H: f64 = 13.996_244_9;

/// Zeeman slope g·μ_B/h in MHz/mT for a given g factor.
#[inline]
pub fn zeeman_mhz_per_mt(g: f64) -> f64 {
    g * BOHR_MAGNETON_OVER_H
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeeman_slope_for_free_electron_scale_g() {
        // g = 1.992 is the ground-state g factor of the defect; the slope
        // of the m_s = -1 <-> 0 line is then 27.88 MHz/mT.
        let slope = zeeman_mhz_per_mt(1.992);
        assert!((slope - 27.880_52).abs() < 5e-4, "slope = {slope}");
    }

    #[test]
    fn unit_slope_is_the_bohr_ratio() {
        assert_eq!(zeeman_mhz_per_mt(1.0), BOHR_MAGNETON_OVER_H);
    }
}
