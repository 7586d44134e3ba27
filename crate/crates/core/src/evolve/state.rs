//! Density-matrix state of the electron(⊗nuclear) system.

use num_complex::Complex64;

use crate::error::{Result, VbError};
use crate::linalg::{hermiticity_defect, trace, CMat};

/// A quantum state stored as a density matrix. Pure states enter through
/// [`QuantumState::from_pure`]; everything downstream works on ρ.
#[derive(Debug, Clone)]
pub struct QuantumState {
    pub rho: CMat,
}

impl QuantumState {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// ρ = |ψ⟩⟨ψ| from a (normalised) state vector.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(VbError::Domain(format!(
                "pure state must be unit norm, got |ψ|² = {norm}"
            )));
        }
        let d = psi.len();
        let mut rho = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                rho[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        Ok(QuantumState { rho })
    }

    /// Basis state |i⟩⟨i|.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut rho = CMat::zeros(dim, dim);
        rho[(i, i)] = Complex64::new(1.0, 0.0);
        QuantumState { rho }
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        QuantumState { rho: CMat::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0) }
    }

    pub fn trace(&self) -> f64 {
        trace(&self.rho).re
    }

    /// Population of basis state i.
    pub fn population(&self, i: usize) -> f64 {
        self.rho[(i, i)].re
    }

    /// Population of one electron level, traced over the nuclear factor.
    /// Electron index runs over m_s = +1, 0, −1; dim must be 3·nuc_dim.
    pub fn electron_population(&self, electron_index: usize) -> f64 {
        let nuc_dim = self.dim() / 3;
        (0..nuc_dim)
            .map(|n| self.rho[(electron_index * nuc_dim + n, electron_index * nuc_dim + n)].re)
            .sum()
    }

    /// Largest elementwise difference to another state.
    pub fn max_diff(&self, other: &QuantumState) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in self.rho.iter().zip(other.rho.iter()) {
            worst = worst.max((a - b).norm());
        }
        worst
    }

    /// Check trace, Hermiticity and positivity within the stated tolerances.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(VbError::Domain(format!("trace(ρ) = {tr}, expected 1")));
        }
        if hermiticity_defect(&self.rho) > 1e-9 {
            return Err(VbError::Domain("density matrix is not Hermitian".into()));
        }
        let min_eig = self
            .rho
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        if min_eig < -1e-9 {
            return Err(VbError::Domain(format!(
                "density matrix has negative eigenvalue {min_eig}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_state_is_valid_and_pure() {
        let s = QuantumState::basis(3, 1);
        s.validate().unwrap();
        assert_eq!(s.population(1), 1.0);
        assert_eq!(s.electron_population(1), 1.0);
    }

    #[test]
    fn electron_population_traces_out_nuclei() {
        // 3 electron levels × 2-dim dummy nuclear factor.
        let mut rho = CMat::zeros(6, 6);
        for i in 0..6 {
            rho[(i, i)] = Complex64::new(1.0 / 6.0, 0.0);
        }
        let s = QuantumState { rho };
        assert!((s.electron_population(0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unnormalised_pure_state_rejected() {
        let psi = [Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)];
        assert!(QuantumState::from_pure(&psi).is_err());
    }
}
