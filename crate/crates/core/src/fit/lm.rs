//! Damped Gauss–Newton (Levenberg–Marquardt) least-squares engine.
//!
//! Minimises Σᵢ ((yᵢ − f(θ, xᵢ))/σᵢ)² with a Marquardt-scaled damping term,
//! forward-difference Jacobians and box bounds by step clamping. Parameter
//! uncertainties come from the linearised covariance (JᵀJ)⁻¹·s² at the
//! optimum, s² being the residual variance.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VbError};
use crate::fit::model::FitModel;
use crate::protocols::series::DataSeries;

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative cost-change convergence threshold.
    pub cost_tol: f64,
    /// Gradient infinity-norm convergence threshold.
    pub grad_tol: f64,
    /// Relative forward-difference step.
    pub fd_rel_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iterations: 500, cost_tol: 1e-10, grad_tol: 1e-8, fd_rel_step: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitResult {
    pub model: String,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    /// 1σ linearised uncertainties, same order as `params`.
    pub uncertainties: Vec<f64>,
    pub reduced_chi2: f64,
    /// Weighted residuals (y − ŷ)/σ.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub final_damping: f64,
    pub converged: bool,
}

fn weighted_residuals(model: &FitModel, data: &DataSeries, theta: &[f64], sigma: &[f64]) -> Vec<f64> {
    data.x
        .iter()
        .zip(&data.y)
        .zip(sigma)
        .map(|((&x, &y), &s)| (y - model.eval(theta, x)) / s)
        .collect()
}

fn cost_of(res: &[f64]) -> f64 {
    res.iter().map(|r| r * r).sum()
}

fn clamp(theta: &mut [f64], bounds: &[(f64, f64)]) {
    for (t, (lo, hi)) in theta.iter_mut().zip(bounds) {
        *t = t.clamp(*lo, *hi);
    }
}

/// Forward-difference Jacobian of the weighted residual vector.
fn jacobian(
    model: &FitModel,
    data: &DataSeries,
    theta: &[f64],
    sigma: &[f64],
    base: &[f64],
    rel_step: f64,
    bounds: &[(f64, f64)],
) -> DMatrix<f64> {
    let n = data.len();
    let p = theta.len();
    let mut jac = DMatrix::<f64>::zeros(n, p);
    let mut probe = theta.to_vec();
    for j in 0..p {
        let mut h = rel_step * theta[j].abs().max(1e-2);
        // Step backwards if forward would leave the box.
        if theta[j] + h > bounds[j].1 {
            h = -h;
        }
        probe[j] = theta[j] + h;
        let shifted = weighted_residuals(model, data, &probe, sigma);
        probe[j] = theta[j];
        for i in 0..n {
            jac[(i, j)] = (shifted[i] - base[i]) / h;
        }
    }
    jac
}

/// Render the dominant components of a null-space direction by name.
fn describe_combination(names: &[String], v: &DVector<f64>) -> String {
    let mut terms: Vec<(f64, &String)> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (v[i], n))
        .filter(|(c, _)| c.abs() > 0.25)
        .collect();
    if terms.is_empty() {
        // Fall back to the single largest component.
        let (i, c) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, c)| (i, *c))
            .unwrap_or((0, 1.0));
        terms.push((c, &names[i]));
    }
    terms
        .iter()
        .map(|(c, n)| format!("{c:+.2}·{n}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Nonlinear least-squares fit of `model` to `data`.
///
/// `bounds` may be empty (unbounded) or one (lo, hi) pair per parameter;
/// `theta0` must lie inside. Convergence: relative cost change below
/// `cost_tol` or gradient norm below `grad_tol` within `max_iterations`.
pub fn nlls_fit(
    model: &FitModel,
    data: &DataSeries,
    theta0: &[f64],
    bounds: &[(f64, f64)],
    opts: &FitOptions,
) -> Result<FitResult> {
    data.validate()?;
    let p = model.n_params();
    let n = data.len();
    if theta0.len() != p {
        return Err(VbError::Config(format!(
            "model {} expects {p} parameters, got {}",
            model.name,
            theta0.len()
        )));
    }
    if n <= p {
        return Err(VbError::Config(format!(
            "need more than {p} points to fit {}, got {n}",
            model.name
        )));
    }
    let bounds: Vec<(f64, f64)> = if bounds.is_empty() {
        vec![(f64::NEG_INFINITY, f64::INFINITY); p]
    } else if bounds.len() == p {
        bounds.to_vec()
    } else {
        return Err(VbError::Config("bounds length must match parameter count".into()));
    };
    for (j, (&t, (lo, hi))) in theta0.iter().zip(&bounds).enumerate() {
        if t < *lo || t > *hi {
            return Err(VbError::Config(format!(
                "initial {} = {t} outside bounds [{lo}, {hi}]",
                model.param_names[j]
            )));
        }
    }
    let sigma: Vec<f64> = match &data.y_sigma {
        Some(s) => {
            if s.iter().any(|v| *v <= 0.0) {
                return Err(VbError::Config("y_sigma must be strictly positive for fitting".into()));
            }
            s.clone()
        }
        None => vec![1.0; n],
    };

    let mut theta = theta0.to_vec();
    let mut residuals = weighted_residuals(model, data, &theta, &sigma);
    let mut cost = cost_of(&residuals);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(model, data, &theta, &sigma, &residuals, opts.fd_rel_step, &bounds);
        let jt = jac.transpose();
        let a = &jt * &jac;
        let grad = &jt * DVector::from_column_slice(&residuals);
        // r = (y − ŷ)/σ and J = ∂r/∂θ, so the descent step solves
        // (A + λ·diag A)·δ = +Jᵀr ... with our sign convention ∂r/∂θ = −∂ŷ/∂θ/σ,
        // the Gauss-Newton step is δ = −(A)⁻¹·Jᵀr.
        if grad.amax() < opts.grad_tol {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut damped = a.clone();
            for j in 0..p {
                let d = a[(j, j)].max(1e-30);
                damped[(j, j)] += lambda * d;
            }
            let step = match damped.clone().cholesky() {
                Some(ch) => ch.solve(&grad) * -1.0,
                None => {
                    lambda *= 4.0;
                    continue;
                }
            };
            let mut trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            clamp(&mut trial, &bounds);
            let trial_res = weighted_residuals(model, data, &trial, &sigma);
            let trial_cost = cost_of(&trial_res);
            if trial_cost.is_finite() && trial_cost < cost {
                let rel_drop = (cost - trial_cost) / cost.max(1e-300);
                theta = trial;
                residuals = trial_res;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel_drop < opts.cost_tol {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if converged {
            break;
        }
        if !improved {
            // Damping exhausted: accept as converged only with a small gradient.
            let jac = jacobian(model, data, &theta, &sigma, &residuals, opts.fd_rel_step, &bounds);
            let grad = jac.transpose() * DVector::from_column_slice(&residuals);
            converged = grad.amax() < opts.grad_tol * 100.0;
            break;
        }
    }

    if !converged {
        return Err(VbError::NonConvergence {
            iterations,
            best_cost: cost,
            best_params: theta,
        });
    }

    // Linearised covariance at the optimum.
    let jac = jacobian(model, data, &theta, &sigma, &residuals, opts.fd_rel_step, &bounds);
    let a = jac.transpose() * &jac;
    let dof = (n - p).max(1);
    let s2 = cost / dof as f64;
    let eig = a.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.amax();
    let min_idx = (0..p)
        .min_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap())
        .unwrap_or(0);
    if eig.eigenvalues[min_idx] <= 1e-14 * max_eig.max(1e-300) {
        let v = eig.eigenvectors.column(min_idx).into_owned();
        return Err(VbError::RankDeficient {
            combination: describe_combination(&model.param_names, &v),
        });
    }
    let cov = a
        .try_inverse()
        .ok_or_else(|| VbError::Numerical("normal equations could not be inverted".into()))?;
    let uncertainties: Vec<f64> = (0..p).map(|j| (cov[(j, j)].max(0.0) * s2).sqrt()).collect();

    Ok(FitResult {
        model: model.name.clone(),
        param_names: model.param_names.clone(),
        params: theta,
        uncertainties,
        reduced_chi2: s2,
        residuals,
        iterations,
        final_damping: lambda,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::model::{model_damped_cosines, model_exp_decay, model_linear, model_lorentzian_sum};
    use crate::protocols::series::linspace;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn synth(model: &FitModel, theta: &[f64], xs: &[f64], noise: f64, seed: u64) -> DataSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let n: f64 = if noise > 0.0 {
                    rng.sample::<f64, _>(rand_distr::StandardNormal) * noise
                } else {
                    0.0
                };
                model.eval(theta, x) + n
            })
            .collect();
        let sigma = if noise > 0.0 { Some(vec![noise; xs.len()]) } else { None };
        DataSeries::new(xs.to_vec(), y, sigma).unwrap()
    }

    #[test]
    fn exact_data_with_true_start_returns_truth() {
        let model = model_exp_decay(false);
        let theta = [1.5, 3.0, 0.2];
        let data = synth(&model, &theta, &linspace(0.0, 10.0, 50), 0.0, 0);
        let fit = nlls_fit(&model, &data, &theta, &[], &FitOptions::default()).unwrap();
        for (got, want) in fit.params.iter().zip(theta) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(fit.reduced_chi2 < 1e-20, "chi2 {}", fit.reduced_chi2);
    }

    #[test]
    fn damped_cosine_frequency_recovered_within_half_percent() {
        let model = model_damped_cosines(1);
        // A, T, f = 10 MHz, φ, b, T_b, c
        let truth = [1.0, 1.2, 10.0, 0.4, 0.3, 4.0, 0.1];
        let xs = linspace(0.0, 2.0, 400);
        let data = synth(&model, &truth, &xs, 0.01, 42);
        let theta0 = [0.8, 1.0, 9.3, 0.0, 0.2, 3.0, 0.0];
        let fit = nlls_fit(&model, &data, &theta0, &[], &FitOptions::default()).unwrap();
        let f = fit.params[2];
        assert!((f - 10.0).abs() / 10.0 < 5e-3, "fitted f = {f}");
        assert!(fit.reduced_chi2 < 2.0, "chi2 {}", fit.reduced_chi2);
    }

    #[test]
    fn linear_model_matches_closed_form() {
        // Closed-form least squares oracle.
        let model = model_linear();
        let xs = linspace(-3.0, 7.0, 23);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y: Vec<f64> = xs.iter().map(|&x| 2.0 - 0.7 * x + 0.05 * rng.random::<f64>()).collect();
        let data = DataSeries::new(xs.clone(), y.clone(), None).unwrap();
        let nf = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&y).map(|(x, v)| x * v).sum();
        let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
        let intercept = (sy - slope * sx) / nf;
        let fit = nlls_fit(&model, &data, &[0.0, 0.0], &[], &FitOptions::default()).unwrap();
        assert!((fit.params[0] - intercept).abs() < 1e-10, "{} vs {intercept}", fit.params[0]);
        assert!((fit.params[1] - slope).abs() < 1e-10, "{} vs {slope}", fit.params[1]);
    }

    #[test]
    fn two_lorentzian_centers_on_bimodal_dip_data() {
        let model = model_lorentzian_sum(2);
        let truth = [0.0, -0.02, 3424.5, 60.0, -0.018, 3533.5, 55.0];
        let xs = linspace(3250.0, 3700.0, 451);
        let data = synth(&model, &truth, &xs, 2e-4, 3);
        let theta0 = [0.001, -0.015, 3410.0, 80.0, -0.015, 3550.0, 80.0];
        let fit = nlls_fit(&model, &data, &theta0, &[], &FitOptions::default()).unwrap();
        assert!((fit.params[2] - 3424.5).abs() < 2.0, "center0 {}", fit.params[2]);
        assert!((fit.params[5] - 3533.5).abs() < 2.0, "center1 {}", fit.params[5]);
    }

    #[test]
    fn round_trip_all_models_from_perturbed_starts() {
        // Noiseless data, parameters drawn in sensible boxes, start values
        // perturbed by 10%: recovery must be tight for every model.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..50 {
            // Grid must cover each model's feature scale.
            let xs = if trial % 4 == 2 {
                linspace(0.0, 100.0, 300)
            } else {
                linspace(0.0, 8.0, 300)
            };
            let (model, truth): (FitModel, Vec<f64>) = match trial % 4 {
                0 => {
                    let m = model_exp_decay(false);
                    (m, vec![rng.random_range(0.5..2.0), rng.random_range(0.5..4.0), rng.random_range(-0.3..0.3)])
                }
                1 => {
                    let m = model_exp_decay(true);
                    (m, vec![
                        rng.random_range(0.8..1.5),
                        rng.random_range(0.05..0.12),
                        rng.random_range(0.3..0.6),
                        rng.random_range(2.0..5.0),
                        rng.random_range(-0.2..0.2),
                    ])
                }
                2 => {
                    let m = model_lorentzian_sum(1);
                    (m, vec![
                        rng.random_range(-0.1..0.1),
                        rng.random_range(-2.0..-0.5),
                        rng.random_range(40.0..60.0),
                        rng.random_range(4.0..9.0),
                    ])
                }
                _ => {
                    let m = model_damped_cosines(1);
                    (m, vec![
                        rng.random_range(0.5..1.5),
                        rng.random_range(0.8..2.0),
                        rng.random_range(5.0..15.0),
                        rng.random_range(-0.5..0.5),
                        rng.random_range(0.1..0.4),
                        rng.random_range(2.0..6.0),
                        rng.random_range(-0.2..0.2),
                    ])
                }
            };
            let data = synth(&model, &truth, &xs, 0.0, trial as u64);
            let theta0: Vec<f64> = truth.iter().map(|t| t * (1.0 + 0.1 * (rng.random::<f64>() - 0.5))).collect();
            let fit = nlls_fit(&model, &data, &theta0, &[], &FitOptions::default())
                .unwrap_or_else(|e| panic!("trial {trial} ({}) failed: {e}", model.name));
            for ((got, want), name) in fit.params.iter().zip(&truth).zip(&model.param_names) {
                let scale = want.abs().max(1e-3);
                assert!(
                    (got - want).abs() / scale < 1e-6,
                    "trial {trial} {}::{name}: {got} vs {want}",
                    model.name
                );
            }
        }
    }

    #[test]
    fn chi2_is_near_one_for_correct_noise_model() {
        let model = model_exp_decay(false);
        let truth = [1.0, 2.0, 0.1];
        let xs = linspace(0.0, 8.0, 120);
        let mut mean_chi2 = 0.0;
        let fits = 100;
        for seed in 0..fits {
            let data = synth(&model, &truth, &xs, 0.02, 1000 + seed);
            let fit = nlls_fit(&model, &data, &[0.8, 1.5, 0.0], &[], &FitOptions::default()).unwrap();
            mean_chi2 += fit.reduced_chi2;
        }
        mean_chi2 /= fits as f64;
        assert!(
            (mean_chi2 - 1.0).abs() < 0.3,
            "mean reduced chi² over {fits} fits: {mean_chi2}"
        );
    }

    #[test]
    fn rank_deficiency_names_the_degenerate_parameters() {
        // Two exponentials with identical decay constants are unidentifiable.
        let model = model_exp_decay(true);
        let xs = linspace(0.0, 5.0, 80);
        let y: Vec<f64> = xs.iter().map(|&x| 1.0 * (-x / 2.0f64).exp() + 0.1).collect();
        let data = DataSeries::new(xs, y, None).unwrap();
        let theta0 = [0.5, 2.0, 0.5, 2.0, 0.1];
        match nlls_fit(&model, &data, &theta0, &[], &FitOptions::default()) {
            Err(VbError::RankDeficient { combination }) => {
                assert!(
                    combination.contains("amplitude") || combination.contains("decay"),
                    "combination: {combination}"
                );
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn start_outside_bounds_is_rejected() {
        let model = model_linear();
        let data = DataSeries::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], None).unwrap();
        let err = nlls_fit(&model, &data, &[5.0, 1.0], &[(0.0, 1.0), (0.0, 2.0)], &FitOptions::default());
        assert!(err.is_err());
    }

    #[test]
    fn fit_is_invariant_under_x_rescaling() {
        // Rescaling x (and the x-carrying parameters) must reproduce the
        // same dimensionless shape.
        let model = model_exp_decay(false);
        let truth = [1.3, 2.2, 0.15];
        let xs = linspace(0.0, 9.0, 90);
        let data = synth(&model, &truth, &xs, 0.01, 11);
        let fit_a = nlls_fit(&model, &data, &[1.0, 1.5, 0.0], &[], &FitOptions::default()).unwrap();
        let k = 1000.0;
        let xs_scaled: Vec<f64> = data.x.iter().map(|x| x * k).collect();
        let scaled = DataSeries::new(xs_scaled, data.y.clone(), data.y_sigma.clone()).unwrap();
        let fit_b = nlls_fit(&model, &scaled, &[1.0, 1.5 * k, 0.0], &[], &FitOptions::default()).unwrap();
        assert!((fit_a.params[0] - fit_b.params[0]).abs() < 1e-8);
        assert!((fit_a.params[1] * k - fit_b.params[1]).abs() / (fit_a.params[1] * k) < 1e-8);
        assert!((fit_a.params[2] - fit_b.params[2]).abs() < 1e-8);
    }
}
