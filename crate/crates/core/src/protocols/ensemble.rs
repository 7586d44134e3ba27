//! Ensemble averaging: nuclear sectors × Gaussian inhomogeneity, plus the
//! phenomenological background and seeded synthetic noise.
//!
//! The inhomogeneous broadening is modelled as a Gaussian distribution of
//! the zero-field splitting (a uniform shift of both electron branches),
//! integrated with deterministic Gauss–Hermite quadrature. All reductions
//! run in a fixed member order, so results are identical for any degree of
//! parallelism.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VbError};
use crate::spin::{nuclear_sectors, NuclearConfiguration, SpinSystemConfig};

/// Additive slow background b·exp(−τ/T_b) + c observed on top of the spin
/// signal in dense ensembles.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Background {
    pub b: f64,
    pub t_b_us: f64,
    pub c: f64,
}

impl Default for Background {
    fn default() -> Self {
        Background { b: 0.0, t_b_us: 1.0, c: 0.0 }
    }
}

impl Background {
    pub fn eval(&self, tau_us: f64) -> f64 {
        self.b * (-tau_us / self.t_b_us).exp() + self.c
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSpec {
    /// Average over the nuclear total-m_I sectors (otherwise only m_I = 0).
    pub nuclear_average: bool,
    /// Gaussian width of the detuning distribution, MHz. `None` takes the
    /// field-dependent default from the spin configuration table.
    pub inhomogeneous_width_mhz: Option<f64>,
    /// Gauss–Hermite node count for the Gaussian integral.
    pub n_quadrature: usize,
    /// Synthetic Gaussian noise on the output, contrast units.
    pub noise_sigma: f64,
    pub background: Background,
    /// Seed for the noise stream.
    pub seed: u64,
    /// Enumerate all 3^n nuclear configurations instead of the weighted
    /// total-m_I sectors (identical result, used for cross-checks).
    pub enumerate_configurations: bool,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            nuclear_average: true,
            inhomogeneous_width_mhz: None,
            n_quadrature: 16,
            noise_sigma: 3e-4,
            background: Background::default(),
            seed: 7,
            enumerate_configurations: false,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_quadrature < 1 {
            return Err(VbError::Config("n_quadrature must be at least 1".into()));
        }
        if self.noise_sigma < 0.0 {
            return Err(VbError::Config("noise_sigma must be non-negative".into()));
        }
        if let Some(w) = self.inhomogeneous_width_mhz {
            if w < 0.0 {
                return Err(VbError::Config("inhomogeneous width must be non-negative".into()));
            }
        }
        if self.background.t_b_us <= 0.0 {
            return Err(VbError::Config("background decay time must be positive".into()));
        }
        Ok(())
    }

    /// Effective Gaussian width for this configuration, MHz.
    pub fn width_for(&self, cfg: &SpinSystemConfig) -> f64 {
        self.inhomogeneous_width_mhz
            .unwrap_or_else(|| cfg.t2_star_width(cfg.b_mt))
    }
}

/// Gauss–Hermite nodes mapped to a zero-mean Gaussian of width `sigma`:
/// E[f] ≈ Σ wᵢ·f(δᵢ) with Σ wᵢ = 1. Computed by Golub–Welsch from the
/// Jacobi matrix of the Hermite recurrence.
pub fn gaussian_nodes(sigma: f64, n: usize) -> Vec<(f64, f64)> {
    if n <= 1 || sigma == 0.0 {
        return vec![(0.0, 1.0)];
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let eig = jacobi.symmetric_eigen();
    let mut nodes: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let w = eig.eigenvectors[(0, i)].powi(2);
            (std::f64::consts::SQRT_2 * sigma * x, w)
        })
        .collect();
    nodes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    nodes
}

/// One member of the averaged ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleMember {
    pub config: SpinSystemConfig,
    pub nuclear: NuclearConfiguration,
    pub weight: f64,
}

/// The full member list: nuclear sectors (or explicit configurations)
/// crossed with the Gaussian detuning quadrature, in deterministic order.
pub fn ensemble_members(cfg: &SpinSystemConfig, ens: &EnsembleSpec) -> Result<Vec<EnsembleMember>> {
    ens.validate()?;
    let sigma = ens.width_for(cfg);
    let nodes = gaussian_nodes(sigma, ens.n_quadrature);

    let nuclear_set: Vec<(NuclearConfiguration, f64)> = if !ens.nuclear_average {
        vec![(NuclearConfiguration::with_total(cfg.n_nuclei, 0)?, 1.0)]
    } else if ens.enumerate_configurations {
        NuclearConfiguration::enumerate(cfg.n_nuclei)
            .into_iter()
            .map(|c| {
                let w = c.weight();
                (c, w)
            })
            .collect()
    } else {
        nuclear_sectors(cfg.n_nuclei)
            .into_iter()
            .map(|s| {
                (
                    NuclearConfiguration::with_total(cfg.n_nuclei, s.total_mi)
                        .expect("sector within range"),
                    s.weight,
                )
            })
            .collect()
    };

    let mut members = Vec::with_capacity(nuclear_set.len() * nodes.len());
    for (nuclear, w_nuc) in &nuclear_set {
        for &(delta, w_g) in &nodes {
            let mut member_cfg = cfg.clone();
            member_cfg.zfs_offset_mhz += delta;
            members.push(EnsembleMember {
                config: member_cfg,
                nuclear: nuclear.clone(),
                weight: w_nuc * w_g,
            });
        }
    }
    Ok(members)
}

/// Weighted ensemble average of a per-member kernel over the grid `x`,
/// with background and seeded noise applied to the averaged trace.
///
/// The kernel receives the member configuration (detuning folded into the
/// zero-field splitting) and its nuclear configuration, and must return one
/// value per grid point. Members evaluate in parallel; the reduction order
/// is fixed.
pub fn ensemble_average<F>(
    cfg: &SpinSystemConfig,
    ens: &EnsembleSpec,
    x: &[f64],
    kernel: F,
) -> Result<Vec<f64>>
where
    F: Fn(&SpinSystemConfig, &NuclearConfiguration) -> Result<Vec<f64>> + Sync,
{
    let members = ensemble_members(cfg, ens)?;
    let traces: Vec<Result<Vec<f64>>> = members
        .par_iter()
        .map(|m| {
            let trace = kernel(&m.config, &m.nuclear)?;
            if trace.len() != x.len() {
                return Err(VbError::Domain(format!(
                    "kernel returned {} points for a {}-point grid",
                    trace.len(),
                    x.len()
                )));
            }
            Ok(trace)
        })
        .collect();

    let mut y = vec![0.0; x.len()];
    for (member, trace) in members.iter().zip(traces) {
        let trace = trace?;
        for (acc, v) in y.iter_mut().zip(trace) {
            *acc += member.weight * v;
        }
    }
    for (acc, &xi) in y.iter_mut().zip(x) {
        *acc += ens.background.eval(xi);
    }
    apply_noise(&mut y, ens);
    Ok(y)
}

/// Seeded additive Gaussian noise, drawn sequentially per point.
pub fn apply_noise(y: &mut [f64], ens: &EnsembleSpec) {
    if ens.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(ens.seed);
        for v in y.iter_mut() {
            let n: f64 = rng.sample(rand_distr::StandardNormal);
            *v += ens.noise_sigma * n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_nodes_integrate_gaussian_moments() {
        // Oracle: exact moments of N(0, σ²).
        let sigma = 3.0;
        for n in [4usize, 8, 16, 32] {
            let nodes = gaussian_nodes(sigma, n);
            let total: f64 = nodes.iter().map(|&(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-12, "weights sum {total}");
            let m2: f64 = nodes.iter().map(|&(x, w)| w * x * x).sum();
            assert!((m2 - sigma * sigma).abs() < 1e-9, "n = {n}: ⟨δ²⟩ = {m2}");
            let m4: f64 = nodes.iter().map(|&(x, w)| w * x.powi(4)).sum();
            assert!((m4 - 3.0 * sigma.powi(4)).abs() < 1e-6, "n = {n}: ⟨δ⁴⟩ = {m4}");
        }
    }

    #[test]
    fn degenerate_ensemble_is_a_single_kernel_call() {
        let cfg = SpinSystemConfig { n_nuclei: 0, ..Default::default() };
        let ens = EnsembleSpec {
            inhomogeneous_width_mhz: Some(0.0),
            noise_sigma: 0.0,
            ..Default::default()
        };
        let x = [0.0, 1.0, 2.0];
        let y = ensemble_average(&cfg, &ens, &x, |m_cfg, _| {
            Ok(x.iter().map(|&t| t + m_cfg.zfs_offset_mhz).collect())
        })
        .unwrap();
        assert_eq!(y, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn sector_sum_equals_full_enumeration() {
        // 27 explicit configurations vs 7 weighted sectors.
        let cfg = SpinSystemConfig::default();
        let base = EnsembleSpec {
            inhomogeneous_width_mhz: Some(4.0),
            n_quadrature: 6,
            noise_sigma: 0.0,
            ..Default::default()
        };
        let x: Vec<f64> = (0..5).map(|i| i as f64 * 0.1).collect();
        let kernel = |m_cfg: &SpinSystemConfig, nuc: &NuclearConfiguration| {
            let shift = m_cfg.zfs_offset_mhz + 47.0 * nuc.total_mi() as f64;
            Ok(x.iter().map(|&t| (shift * (t + 0.3)).cos()).collect())
        };
        let sectors = ensemble_average(&cfg, &base, &x, kernel).unwrap();
        let enumerated = ensemble_average(
            &cfg,
            &EnsembleSpec { enumerate_configurations: true, ..base },
            &x,
            kernel,
        )
        .unwrap();
        for (a, b) in sectors.iter().zip(&enumerated) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn quadrature_refinement_converges() {
        // Doubling the node count from 16 to 32 must not move the result.
        let cfg = SpinSystemConfig { n_nuclei: 0, ..Default::default() };
        let x: Vec<f64> = (0..8).map(|i| i as f64 * 0.02).collect();
        // Detuned-Rabi kernel: far-detuned members are visibility-filtered,
        // as in the real protocols.
        let omega = 20.0;
        let kernel = |m_cfg: &SpinSystemConfig, _: &NuclearConfiguration| {
            let delta = m_cfg.zfs_offset_mhz;
            let w = (omega * omega + delta * delta).sqrt();
            let vis = omega * omega / (w * w);
            Ok(x.iter()
                .map(|&t| vis * (std::f64::consts::PI * w * t).sin().powi(2))
                .collect())
        };
        let run = |n: usize| {
            ensemble_average(
                &cfg,
                &EnsembleSpec {
                    inhomogeneous_width_mhz: Some(6.0),
                    n_quadrature: n,
                    noise_sigma: 0.0,
                    ..Default::default()
                },
                &x,
                &kernel,
            )
            .unwrap()
        };
        let coarse = run(16);
        let fine = run(32);
        let worst = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-4, "quadrature not converged: {worst}");
    }

    #[test]
    fn noise_is_bit_reproducible() {
        let ens = EnsembleSpec { noise_sigma: 0.01, seed: 99, ..Default::default() };
        let mut a = vec![0.0; 32];
        let mut b = vec![0.0; 32];
        apply_noise(&mut a, &ens);
        apply_noise(&mut b, &ens);
        assert_eq!(a, b);
        let mut c = vec![0.0; 32];
        apply_noise(&mut c, &EnsembleSpec { seed: 100, ..ens });
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(EnsembleSpec { n_quadrature: 0, ..Default::default() }.validate().is_err());
        assert!(EnsembleSpec { noise_sigma: -0.1, ..Default::default() }.validate().is_err());
        assert!(EnsembleSpec { inhomogeneous_width_mhz: Some(-1.0), ..Default::default() }
            .validate()
            .is_err());
    }
}
