//! Simulator and fitting toolkit for the S = 1 boron-vacancy spin defect in
//! hexagonal boron nitride.
//!
//! The crate builds the ground-state spin Hamiltonian (zero-field splitting,
//! strain, Zeeman, hyperfine coupling to three nitrogen nuclei), evolves it
//! through laser/microwave pulse sequences with Lindblad relaxation, and
//! reproduces the standard magnetometry protocol set: CW ODMR spectra,
//! Zeeman scans, Rabi oscillations, T1 relaxation, Hahn echo and Ramsey
//! interference. A nonlinear least-squares engine with the matching model
//! library (Lorentzian sums, damped cosines, exponential decays) recovers
//! the physical parameters back from simulated or external data.

pub mod constants;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod linalg;
pub mod protocols;
pub mod spin;

pub use error::{Result, VbError};
