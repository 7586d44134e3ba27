//! Time evolution: unitary propagation, Lindblad relaxation, the optical
//! pumping model and pulse-sequence execution.

pub mod lindblad;
pub mod optical;
pub mod propagator;
pub mod sequence;
pub mod state;

pub use lindblad::{evolve_lindblad, suggested_dt, RelaxationChannels};
pub use optical::OpticalRateModel;
pub use propagator::{apply_unitary, propagator};
pub use sequence::{
    polarize, readout_contrast, run_sequence, EngineOptions, NuclearMode, PulseSegment,
    PulseSequence, ReadoutParams, Sweep, SweepField, SweepTarget,
};
pub use state::QuantumState;
