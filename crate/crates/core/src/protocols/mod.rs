//! Experiment drivers producing [`DataSeries`]: CW ODMR, Zeeman scans and
//! the pulsed protocol family with ensemble averaging.

pub mod ensemble;
pub mod odmr;
pub mod pulsed;
pub mod series;

pub use ensemble::{apply_noise, ensemble_average, ensemble_members, gaussian_nodes, Background, EnsembleSpec};
pub use odmr::{odmr_spectrum, zeeman_scan};
pub use pulsed::{
    damped_cosine_bounds, echo_experiment, fitted_rabi_frequency, rabi, rabi_vs_power,
    ramsey_experiment, t1_experiment, PowerMap, PulsedContext,
};
pub use series::{linspace, DataSeries};
