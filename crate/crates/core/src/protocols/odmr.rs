//! CW ODMR spectra and the Zeeman line-position scan.

use crate::error::{Result, VbError};
use crate::evolve::optical::OpticalRateModel;
use crate::fit::{guess_lorentzian_sum, model_lorentzian_sum, nlls_fit, FitOptions};
use crate::protocols::ensemble::{apply_noise, gaussian_nodes, EnsembleSpec};
use crate::protocols::series::{linspace, DataSeries};
use crate::spin::{transition_table, Branch, SpinSystemConfig, TransitionLine};

/// Peak-normalised Lorentzian line profile.
fn lorentzian(delta: f64, fwhm: f64) -> f64 {
    let half = fwhm / 2.0;
    half * half / (delta * delta + half * half)
}

/// Microwave mixing strength at drive frequency `f` for one branch:
/// multiplicity-weighted comb lines, Lorentzian profile convolved with the
/// Gaussian inhomogeneity by quadrature.
fn branch_weight(
    f: f64,
    lines: &[TransitionLine],
    branch: Branch,
    fwhm: f64,
    nodes: &[(f64, f64)],
) -> f64 {
    lines
        .iter()
        .filter(|l| l.branch == branch)
        .map(|l| {
            let conv: f64 = nodes
                .iter()
                .map(|&(delta, w)| w * lorentzian(f - l.frequency_mhz - delta, fwhm))
                .sum();
            l.weight * conv
        })
        .sum()
}

/// CW ODMR spectrum: fluorescence contrast of the seven-level steady state
/// with the microwave mixing rate following the ensemble-broadened
/// transition comb.
pub fn odmr_spectrum(
    cfg: &SpinSystemConfig,
    optical: &OpticalRateModel,
    f_grid_mhz: &[f64],
    ens: &EnsembleSpec,
) -> Result<DataSeries> {
    cfg.validate()?;
    optical.validate()?;
    ens.validate()?;
    if f_grid_mhz.is_empty() {
        return Err(VbError::Config("frequency grid is empty".into()));
    }
    let lines = transition_table(cfg);
    let sigma = ens.width_for(cfg);
    let nodes = gaussian_nodes(sigma, ens.n_quadrature);
    let fwhm = cfg.odmr_linewidth_mhz;
    let k_mw = optical.mw_mixing_rate;

    let off = optical.fluorescence(&optical.steady_state(0.0, 0.0)?);
    let mut y = Vec::with_capacity(f_grid_mhz.len());
    for &f in f_grid_mhz {
        let lower = k_mw * branch_weight(f, &lines, Branch::Lower, fwhm, &nodes);
        let upper = k_mw * branch_weight(f, &lines, Branch::Upper, fwhm, &nodes);
        let on = optical.fluorescence(&optical.steady_state(lower, upper)?);
        y.push((on - off) / off);
    }
    apply_noise(&mut y, ens);
    let sigma_col = (ens.noise_sigma > 0.0).then(|| vec![ens.noise_sigma; y.len()]);
    DataSeries::new(f_grid_mhz.to_vec(), y, sigma_col).map(|s| {
        s.with_meta("protocol", "odmr")
            .with_meta("b_mt", cfg.b_mt)
            .with_meta("linewidth_mhz", fwhm)
    })
}

/// Dip position of the lower branch versus magnetic field: per field value
/// the spectrum around the branch is simulated and fitted with a single
/// Lorentzian; the fitted center is the line position.
pub fn zeeman_scan(
    cfg: &SpinSystemConfig,
    optical: &OpticalRateModel,
    b_list_mt: &[f64],
    ens: &EnsembleSpec,
) -> Result<DataSeries> {
    if b_list_mt.is_empty() {
        return Err(VbError::Config("field list is empty".into()));
    }
    if b_list_mt.iter().any(|&b| b < 0.0) {
        return Err(VbError::Config("fields must be non-negative".into()));
    }
    if b_list_mt.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VbError::Config("field list must be strictly increasing".into()));
    }
    let mut centers = Vec::with_capacity(b_list_mt.len());
    for (i, &b) in b_list_mt.iter().enumerate() {
        let cfg_b = SpinSystemConfig { b_mt: b, ..cfg.clone() };
        let expected = crate::spin::secular_transition_mhz(&cfg_b, 0, Branch::Lower);
        let comb_span = cfg_b.a_par_mhz * cfg_b.n_nuclei as f64;
        let width = ens.width_for(&cfg_b);
        let span = comb_span + 2.0 * cfg_b.odmr_linewidth_mhz + 4.0 * width + 30.0;
        let n_points = (2.0 * span).ceil() as usize + 1;
        let grid = linspace(expected - span, expected + span, n_points);
        let ens_b = EnsembleSpec { seed: ens.seed.wrapping_add(i as u64), ..ens.clone() };
        let spectrum = odmr_spectrum(&cfg_b, optical, &grid, &ens_b)?;
        let model = model_lorentzian_sum(1);
        let theta0 = guess_lorentzian_sum(&spectrum, 1);
        let fit = nlls_fit(&model, &spectrum, &theta0, &[], &FitOptions::default())?;
        centers.push(fit.params[2]);
    }
    DataSeries::new(b_list_mt.to_vec(), centers, None)
        .map(|s| s.with_meta("protocol", "zeeman").with_meta("n_fields", b_list_mt.len()))
}
