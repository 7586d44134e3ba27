//! The fit-model library: every curve shape the experiments are fitted with.

use crate::constants::BOHR_MAGNETON_OVER_H;

/// A parametric curve y(x; θ) with named parameters.
pub struct FitModel {
    pub name: String,
    pub param_names: Vec<String>,
    eval: Box<dyn Fn(&[f64], f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for FitModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FitModel")
            .field("name", &self.name)
            .field("param_names", &self.param_names)
            .finish()
    }
}

impl FitModel {
    pub fn new(
        name: impl Into<String>,
        param_names: Vec<String>,
        eval: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FitModel { name: name.into(), param_names, eval: Box::new(eval) }
    }

    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn eval(&self, theta: &[f64], x: f64) -> f64 {
        debug_assert_eq!(theta.len(), self.n_params());
        (self.eval)(theta, x)
    }

    pub fn predict(&self, theta: &[f64], xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(theta, x)).collect()
    }
}

/// Sum of `n` Lorentzians on a constant baseline:
/// y = c₀ + Σᵢ Aᵢ·(wᵢ/2)² / ((x − x₀ᵢ)² + (wᵢ/2)²), dips carry negative Aᵢ.
pub fn model_lorentzian_sum(n: usize) -> FitModel {
    let mut names = vec!["c0".to_string()];
    for i in 0..n {
        names.push(format!("amplitude_{i}"));
        names.push(format!("center_{i}"));
        names.push(format!("fwhm_{i}"));
    }
    FitModel::new(format!("lorentzian_sum_{n}"), names, move |theta, x| {
        let mut y = theta[0];
        for i in 0..n {
            let a = theta[1 + 3 * i];
            let x0 = theta[2 + 3 * i];
            let half = theta[3 + 3 * i] / 2.0;
            y += a * half * half / ((x - x0).powi(2) + half * half);
        }
        y
    })
}

/// Σᵢ Aᵢ·exp(−τ/Tᵢ)·cos(2π fᵢ τ + φᵢ) + b·exp(−τ/T_b) + c, with n ∈ 1..=3.
pub fn model_damped_cosines(n: usize) -> FitModel {
    let mut names = Vec::new();
    for i in 0..n {
        names.push(format!("amplitude_{i}"));
        names.push(format!("decay_us_{i}"));
        names.push(format!("frequency_mhz_{i}"));
        names.push(format!("phase_{i}"));
    }
    names.push("background_b".to_string());
    names.push("background_decay_us".to_string());
    names.push("offset_c".to_string());
    FitModel::new(format!("damped_cosines_{n}"), names, move |theta, tau| {
        let mut y = 0.0;
        for i in 0..n {
            let a = theta[4 * i];
            let t = theta[4 * i + 1];
            let f = theta[4 * i + 2];
            let phi = theta[4 * i + 3];
            y += a * (-tau / t).exp() * (2.0 * std::f64::consts::PI * f * tau + phi).cos();
        }
        let b = theta[4 * n];
        let t_b = theta[4 * n + 1];
        let c = theta[4 * n + 2];
        y + b * (-tau / t_b).exp() + c
    })
}

/// a·exp(−τ/T) + c, or the double-decay form
/// a₁·exp(−τ/T_a) + a₂·exp(−τ/T_b) + c.
pub fn model_exp_decay(double: bool) -> FitModel {
    if double {
        FitModel::new(
            "double_exp_decay",
            vec![
                "amplitude_a".into(),
                "decay_a_us".into(),
                "amplitude_b".into(),
                "decay_b_us".into(),
                "offset_c".into(),
            ],
            |theta, tau| {
                theta[0] * (-tau / theta[1]).exp() + theta[2] * (-tau / theta[3]).exp() + theta[4]
            },
        )
    } else {
        FitModel::new(
            "exp_decay",
            vec!["amplitude".into(), "decay_us".into(), "offset_c".into()],
            |theta, tau| theta[0] * (-tau / theta[1]).exp() + theta[2],
        )
    }
}

/// y = intercept + slope·x.
pub fn model_linear() -> FitModel {
    FitModel::new(
        "linear",
        vec!["intercept".into(), "slope".into()],
        |theta, x| theta[0] + theta[1] * x,
    )
}

/// g factor from the fitted Zeeman slope in MHz/mT: g = |slope| / (μ_B/h).
pub fn g_from_slope(slope_mhz_per_mt: f64) -> f64 {
    slope_mhz_per_mt.abs() / BOHR_MAGNETON_OVER_H
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentzian_peaks_at_center_with_half_maximum_width() {
        let model = model_lorentzian_sum(1);
        let theta = [0.0, -1.0, 10.0, 4.0];
        assert!((model.eval(&theta, 10.0) + 1.0).abs() < 1e-15);
        // Half depth at x0 ± w/2.
        assert!((model.eval(&theta, 12.0) + 0.5).abs() < 1e-15);
        assert!((model.eval(&theta, 8.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn damped_cosine_at_zero_tau() {
        let model = model_damped_cosines(1);
        // A cos(φ) + b + c at τ = 0.
        let theta = [2.0, 1.0, 5.0, 0.3, 0.5, 2.0, -0.1];
        let expect = 2.0 * 0.3f64.cos() + 0.5 - 0.1;
        assert!((model.eval(&theta, 0.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn g_factor_conversion() {
        assert!((g_from_slope(-27.880_52) - 1.992).abs() < 1e-4);
        assert_eq!(g_from_slope(0.0), 0.0);
        assert!((g_from_slope(-13.996_244_9) - 1.0).abs() < 1e-12);
    }
}
