//! Spin operators, physical configuration and ground-state Hamiltonians.

pub mod config;
pub mod hamiltonian;
pub mod operators;

pub use config::{nuclear_sectors, NuclearConfiguration, NuclearSector, SpinSystemConfig};
pub use hamiltonian::{
    branch_centers, full_hamiltonian, rotating_frame, secular_hamiltonian,
    secular_transition_mhz, transition_table, Branch, TransitionLine,
};
pub use operators::{spin_operators, SpinOperators};
