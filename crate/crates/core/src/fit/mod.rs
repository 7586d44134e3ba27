//! Nonlinear least-squares engine, model library and automatic guessing.

pub mod guess;
pub mod lm;
pub mod model;

pub use guess::{guess_damped_cosines, guess_exp_decay, guess_frequencies, guess_lorentzian_sum};
pub use lm::{nlls_fit, FitOptions, FitResult};
pub use model::{
    g_from_slope, model_damped_cosines, model_exp_decay, model_linear, model_lorentzian_sum,
    FitModel,
};
