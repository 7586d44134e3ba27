//! Pulsed experiments: Rabi, T1 relaxation, Hahn echo, Ramsey interference
//! and the Rabi-frequency versus microwave-power calibration.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VbError};
use crate::evolve::sequence::{
    run_sequence, EngineOptions, NuclearMode, PulseSegment, PulseSequence, ReadoutParams, Sweep,
    SweepField, SweepTarget,
};
use crate::fit::{guess_damped_cosines, nlls_fit, FitOptions};
use crate::protocols::ensemble::{ensemble_average, EnsembleSpec};
use crate::protocols::series::DataSeries;
use crate::spin::{secular_transition_mhz, Branch, SpinSystemConfig};

/// Shared execution context for the pulsed protocols.
#[derive(Debug, Clone)]
pub struct PulsedContext {
    pub readout: ReadoutParams,
    pub engine: EngineOptions,
    /// Evolve the explicit 3·3^n-dimensional system instead of averaging
    /// classical nuclear sectors.
    pub full_quantum: bool,
    /// Microwave drive phase; π/2 couples the lower strain branch at zero
    /// field and is equivalent to any other phase at high field.
    pub drive_phase_rad: f64,
}

impl Default for PulsedContext {
    fn default() -> Self {
        PulsedContext {
            readout: ReadoutParams::default(),
            engine: EngineOptions::default(),
            full_quantum: false,
            drive_phase_rad: std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Microwave power calibration Ω = κ·√P.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PowerMap {
    pub kappa_mhz_per_sqrt_mw: f64,
}

impl PowerMap {
    pub fn omega(&self, power_mw: f64) -> f64 {
        self.kappa_mhz_per_sqrt_mw * power_mw.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_mhz_per_sqrt_mw > 0.0) {
            return Err(VbError::Config("power map κ must be positive".into()));
        }
        Ok(())
    }
}

fn check_tau_grid(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(VbError::Config("τ grid is empty".into()));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VbError::Config("τ grid must be strictly increasing".into()));
    }
    if taus[0] < 0.0 {
        return Err(VbError::Config("τ values must be non-negative".into()));
    }
    Ok(())
}

/// Resolve the drive frequency: explicit value or the central lower-branch
/// transition at the configured field.
fn resolve_f_mw(cfg: &SpinSystemConfig, f_mw_mhz: Option<f64>) -> f64 {
    f_mw_mhz.unwrap_or_else(|| secular_transition_mhz(cfg, 0, Branch::Lower))
}

/// Effective Rabi frequency of the lower-branch transition for a drive of
/// nominal strength Ω and the given phase: 2·|⟨branch|H_drive|0⟩| between
/// the eigenstates of the free Hamiltonian. Far above the strain field this
/// is Ω; at zero field the strain eigenstates couple √2 stronger, and π
/// pulse durations must follow the calibrated value, exactly as a measured
/// Rabi frequency would be used on the instrument.
pub fn effective_rabi_frequency(cfg: &SpinSystemConfig, omega_mhz: f64, phase_rad: f64) -> Result<f64> {
    let nuc = crate::spin::NuclearConfiguration::with_total(cfg.n_nuclei, 0)?;
    let h_free = crate::spin::secular_hamiltonian(cfg, Some(&nuc))?;
    let eig = h_free.symmetric_eigen();
    // m_s = 0 like state: largest weight on the middle basis vector.
    let zero_idx = (0..3)
        .max_by(|&a, &b| {
            eig.eigenvectors[(1, a)]
                .norm_sqr()
                .partial_cmp(&eig.eigenvectors[(1, b)].norm_sqr())
                .unwrap()
        })
        .unwrap();
    // Lower branch: smaller eigenvalue among the remaining two.
    let lower_idx = (0..3)
        .filter(|&k| k != zero_idx)
        .min_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap())
        .unwrap();
    let ops = crate::spin::spin_operators(1.0)?;
    let amp = omega_mhz / std::f64::consts::SQRT_2;
    let drive = &ops.sx * num_complex::Complex64::new(amp * phase_rad.cos(), 0.0)
        + &ops.sy * num_complex::Complex64::new(amp * phase_rad.sin(), 0.0);
    let v0 = eig.eigenvectors.column(zero_idx);
    let vl = eig.eigenvectors.column(lower_idx);
    let coupling = (vl.adjoint() * &drive * v0)[(0, 0)].norm();
    Ok(2.0 * coupling)
}

/// Run `seq` through the ensemble machinery.
fn averaged(
    cfg: &SpinSystemConfig,
    ens: &EnsembleSpec,
    ctx: &PulsedContext,
    taus: &[f64],
    seq: &PulseSequence,
) -> Result<Vec<f64>> {
    if ctx.full_quantum {
        // The nuclear bath lives inside the Hilbert space; only the
        // Gaussian detuning quadrature remains to be averaged.
        let ens_fq = EnsembleSpec { nuclear_average: false, ..ens.clone() };
        ensemble_average(cfg, &ens_fq, taus, |member_cfg, _| {
            run_sequence(seq, member_cfg, NuclearMode::FullQuantum, &ctx.readout, &ctx.engine)
        })
    } else {
        ensemble_average(cfg, ens, taus, |member_cfg, nuclear| {
            run_sequence(seq, member_cfg, NuclearMode::Secular(nuclear), &ctx.readout, &ctx.engine)
        })
    }
}

fn base_meta(series: DataSeries, cfg: &SpinSystemConfig, f_mw: f64, omega: f64) -> DataSeries {
    series
        .with_meta("b_mt", cfg.b_mt)
        .with_meta("f_mw_mhz", f_mw)
        .with_meta("omega_mhz", omega)
}

fn sigma_column(ens: &EnsembleSpec, n: usize) -> Option<Vec<f64>> {
    (ens.noise_sigma > 0.0).then(|| vec![ens.noise_sigma; n])
}

/// Rabi oscillation: polarise, drive for τ, read out.
pub fn rabi(
    cfg: &SpinSystemConfig,
    ctx: &PulsedContext,
    f_mw_mhz: Option<f64>,
    omega_mhz: f64,
    taus_us: &[f64],
    ens: &EnsembleSpec,
) -> Result<DataSeries> {
    cfg.validate()?;
    check_tau_grid(taus_us)?;
    if !(omega_mhz > 0.0) {
        return Err(VbError::Config("Rabi drive requires Ω > 0".into()));
    }
    let f_mw = resolve_f_mw(cfg, f_mw_mhz);
    let seq = PulseSequence {
        segments: vec![
            PulseSegment::Laser { duration_us: 10.0 },
            PulseSegment::Microwave {
                duration_us: 0.0,
                f_mw_mhz: f_mw,
                omega_mhz,
                phase_rad: ctx.drive_phase_rad,
            },
            PulseSegment::Readout { window_us: 0.3 },
        ],
        sweep: Some(Sweep {
            values: taus_us.to_vec(),
            targets: vec![SweepTarget { segment: 1, field: SweepField::Duration, scale: 1.0 }],
        }),
    };
    let y = averaged(cfg, ens, ctx, taus_us, &seq)?;
    let sigma = sigma_column(ens, y.len());
    Ok(base_meta(
        DataSeries::new(taus_us.to_vec(), y, sigma)?.with_meta("protocol", "rabi"),
        cfg,
        f_mw,
        omega_mhz,
    ))
}

/// Spin-lattice relaxation: polarise, invert with a π pulse, wait τ, read out.
pub fn t1_experiment(
    cfg: &SpinSystemConfig,
    ctx: &PulsedContext,
    omega_mhz: f64,
    taus_us: &[f64],
    ens: &EnsembleSpec,
) -> Result<DataSeries> {
    cfg.validate()?;
    check_tau_grid(taus_us)?;
    if !(omega_mhz > 0.0) {
        return Err(VbError::Config("π pulse requires Ω > 0".into()));
    }
    let f_mw = resolve_f_mw(cfg, None);
    let f_rabi = effective_rabi_frequency(cfg, omega_mhz, ctx.drive_phase_rad)?;
    let seq = PulseSequence {
        segments: vec![
            PulseSegment::Laser { duration_us: 10.0 },
            PulseSegment::Microwave {
                duration_us: 1.0 / (2.0 * f_rabi),
                f_mw_mhz: f_mw,
                omega_mhz,
                phase_rad: ctx.drive_phase_rad,
            },
            PulseSegment::Wait { duration_us: 0.0 },
            PulseSegment::Readout { window_us: 0.3 },
        ],
        sweep: Some(Sweep {
            values: taus_us.to_vec(),
            targets: vec![SweepTarget { segment: 2, field: SweepField::Duration, scale: 1.0 }],
        }),
    };
    let y = averaged(cfg, ens, ctx, taus_us, &seq)?;
    let sigma = sigma_column(ens, y.len());
    Ok(base_meta(
        DataSeries::new(taus_us.to_vec(), y, sigma)?.with_meta("protocol", "t1"),
        cfg,
        f_mw,
        omega_mhz,
    ))
}

/// Hahn echo π/2 − τ/2 − π − τ/2 − π/2; the closing π/2 is phase-inverted
/// so the refocused signal starts at full contrast and decays with T2.
pub fn echo_experiment(
    cfg: &SpinSystemConfig,
    ctx: &PulsedContext,
    omega_mhz: f64,
    taus_us: &[f64],
    ens: &EnsembleSpec,
) -> Result<DataSeries> {
    cfg.validate()?;
    check_tau_grid(taus_us)?;
    if !(omega_mhz > 0.0) {
        return Err(VbError::Config("echo pulses require Ω > 0".into()));
    }
    let f_rabi = effective_rabi_frequency(cfg, omega_mhz, ctx.drive_phase_rad)?;
    let t90 = 1.0 / (4.0 * f_rabi);
    let t180 = 1.0 / (2.0 * f_rabi);
    let pulse_total = 2.0 * t90 + t180;
    if taus_us[0] < pulse_total {
        return Err(VbError::Config(format!(
            "free evolution τ = {} µs is shorter than the pulse footprint {} µs",
            taus_us[0], pulse_total
        )));
    }
    let f_mw = resolve_f_mw(cfg, None);
    let phase = ctx.drive_phase_rad;
    let seq = PulseSequence {
        segments: vec![
            PulseSegment::Laser { duration_us: 10.0 },
            PulseSegment::Microwave { duration_us: t90, f_mw_mhz: f_mw, omega_mhz, phase_rad: phase },
            PulseSegment::Wait { duration_us: 0.0 },
            PulseSegment::Microwave { duration_us: t180, f_mw_mhz: f_mw, omega_mhz, phase_rad: phase },
            PulseSegment::Wait { duration_us: 0.0 },
            PulseSegment::Microwave {
                duration_us: t90,
                f_mw_mhz: f_mw,
                omega_mhz,
                phase_rad: phase + std::f64::consts::PI,
            },
            PulseSegment::Readout { window_us: 0.3 },
        ],
        sweep: Some(Sweep {
            values: taus_us.to_vec(),
            targets: vec![
                SweepTarget { segment: 2, field: SweepField::Duration, scale: 0.5 },
                SweepTarget { segment: 4, field: SweepField::Duration, scale: 0.5 },
            ],
        }),
    };
    let y = averaged(cfg, ens, ctx, taus_us, &seq)?;
    let sigma = sigma_column(ens, y.len());
    Ok(base_meta(
        DataSeries::new(taus_us.to_vec(), y, sigma)?.with_meta("protocol", "echo"),
        cfg,
        f_mw,
        omega_mhz,
    ))
}

/// Ramsey interference π/2 − τ − π/2: fringes at the detuning of every
/// hyperfine line from the drive.
pub fn ramsey_experiment(
    cfg: &SpinSystemConfig,
    ctx: &PulsedContext,
    f_mw_mhz: Option<f64>,
    omega_mhz: f64,
    taus_us: &[f64],
    ens: &EnsembleSpec,
) -> Result<DataSeries> {
    cfg.validate()?;
    check_tau_grid(taus_us)?;
    if !(omega_mhz > 0.0) {
        return Err(VbError::Config("Ramsey pulses require Ω > 0".into()));
    }
    let f_rabi = effective_rabi_frequency(cfg, omega_mhz, ctx.drive_phase_rad)?;
    let t90 = 1.0 / (4.0 * f_rabi);
    if taus_us[0] < 2.0 * t90 {
        return Err(VbError::Config(format!(
            "free evolution τ = {} µs is shorter than the pulse footprint {} µs",
            taus_us[0],
            2.0 * t90
        )));
    }
    let f_mw = resolve_f_mw(cfg, f_mw_mhz);
    let phase = ctx.drive_phase_rad;
    let seq = PulseSequence {
        segments: vec![
            PulseSegment::Laser { duration_us: 10.0 },
            PulseSegment::Microwave { duration_us: t90, f_mw_mhz: f_mw, omega_mhz, phase_rad: phase },
            PulseSegment::Wait { duration_us: 0.0 },
            PulseSegment::Microwave { duration_us: t90, f_mw_mhz: f_mw, omega_mhz, phase_rad: phase },
            PulseSegment::Readout { window_us: 0.3 },
        ],
        sweep: Some(Sweep {
            values: taus_us.to_vec(),
            targets: vec![SweepTarget { segment: 2, field: SweepField::Duration, scale: 1.0 }],
        }),
    };
    let y = averaged(cfg, ens, ctx, taus_us, &seq)?;
    let sigma = sigma_column(ens, y.len());
    Ok(base_meta(
        DataSeries::new(taus_us.to_vec(), y, sigma)?.with_meta("protocol", "ramsey"),
        cfg,
        f_mw,
        omega_mhz,
    ))
}

/// Loose bounds for the damped-cosine model: decay times positive and
/// frequencies constrained positive (the phase absorbs the sign).
pub fn damped_cosine_bounds(n: usize) -> Vec<(f64, f64)> {
    let mut bounds = Vec::new();
    for _ in 0..n {
        bounds.push((f64::NEG_INFINITY, f64::INFINITY)); // amplitude
        bounds.push((1e-6, f64::INFINITY)); // decay
        bounds.push((1e-4, f64::INFINITY)); // frequency > 0
        bounds.push((f64::NEG_INFINITY, f64::INFINITY)); // phase
    }
    bounds.push((f64::NEG_INFINITY, f64::INFINITY)); // b
    bounds.push((1e-6, f64::INFINITY)); // T_b
    bounds.push((f64::NEG_INFINITY, f64::INFINITY)); // c
    bounds
}

/// Fit a single damped cosine to a Rabi trace and return its frequency.
pub fn fitted_rabi_frequency(series: &DataSeries) -> Result<f64> {
    let (theta0, model) = guess_damped_cosines(series, 1)?;
    let fit = nlls_fit(&model, series, &theta0, &damped_cosine_bounds(1), &FitOptions::default())?;
    Ok(fit.params[2])
}

/// Rabi frequency versus microwave power: x = √P, y = fitted Ω(P).
pub fn rabi_vs_power(
    cfg: &SpinSystemConfig,
    ctx: &PulsedContext,
    powers_mw: &[f64],
    map: &PowerMap,
    taus_us: &[f64],
    ens: &EnsembleSpec,
) -> Result<DataSeries> {
    map.validate()?;
    if powers_mw.is_empty() {
        return Err(VbError::Config("power list is empty".into()));
    }
    if powers_mw.iter().any(|&p| p < 0.0) {
        return Err(VbError::Config("powers must be non-negative".into()));
    }
    if powers_mw.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VbError::Config("power list must be strictly increasing".into()));
    }
    let mut omegas = Vec::with_capacity(powers_mw.len());
    for (i, &p) in powers_mw.iter().enumerate() {
        let omega = map.omega(p);
        if omega < 1e-12 {
            // No drive, no oscillation to fit.
            omegas.push(0.0);
            continue;
        }
        let ens_p = EnsembleSpec { seed: ens.seed.wrapping_add(i as u64), ..ens.clone() };
        let trace = rabi(cfg, ctx, None, omega, taus_us, &ens_p)?;
        omegas.push(fitted_rabi_frequency(&trace)?);
    }
    let x: Vec<f64> = powers_mw.iter().map(|p| p.sqrt()).collect();
    DataSeries::new(x, omegas, None).map(|s| {
        s.with_meta("protocol", "rabi_vs_power")
            .with_meta("kappa_mhz_per_sqrt_mw", map.kappa_mhz_per_sqrt_mw)
            .with_meta("b_mt", cfg.b_mt)
    })
}
