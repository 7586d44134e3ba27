//! Physical configuration of the ground-state spin system.

use serde::{Deserialize, Serialize};

use crate::constants::zeeman_mhz_per_mt;
use crate::error::{Result, VbError};

/// All static parameters of the electron spin and its nuclear environment.
///
/// Defaults reproduce the ensemble measured at room temperature: zero-field
/// splitting D = 3479 MHz, strain splitting E = 54.5 MHz, g = 1.992, three
/// I = 1 nitrogen neighbours with axial hyperfine coupling 47 MHz.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinSystemConfig {
    /// Zero-field splitting D, MHz.
    pub d_mhz: f64,
    /// Strain (transverse) splitting E, MHz.
    pub e_mhz: f64,
    /// Electron g factor.
    pub g: f64,
    /// Number of I = 1 nuclei treated explicitly (0..=3).
    pub n_nuclei: usize,
    /// Axial hyperfine coupling A_par, MHz.
    pub a_par_mhz: f64,
    /// Transverse hyperfine coupling A_perp, MHz. Zero keeps the nuclear
    /// projections conserved; a finite value produces echo envelope
    /// modulation in full-quantum mode.
    pub a_perp_mhz: f64,
    /// Spin-lattice relaxation time T1, µs.
    pub t1_us: f64,
    /// Homogeneous coherence time T2, µs.
    pub t2_us: f64,
    /// Static field along the hexagonal c axis, mT.
    pub b_mt: f64,
    /// Inhomogeneous Gaussian detuning width vs field, (mT, MHz) knots.
    /// Linearly interpolated, clamped outside the table.
    pub t2_star_width_table: Vec<(f64, f64)>,
    /// Homogeneous Lorentzian FWHM of a single CW ODMR line, MHz.
    pub odmr_linewidth_mhz: f64,
    /// Uniform shift of the zero-field splitting, MHz. Used by the ensemble
    /// machinery to model strain/ZFS inhomogeneity; leave 0 for a single
    /// defect at the nominal D.
    pub zfs_offset_mhz: f64,
}

impl Default for SpinSystemConfig {
    fn default() -> Self {
        SpinSystemConfig {
            d_mhz: 3479.0,
            e_mhz: 54.5,
            g: 1.992,
            n_nuclei: 3,
            a_par_mhz: 47.0,
            a_perp_mhz: 0.0,
            t1_us: 16.377,
            t2_us: 0.082_121,
            b_mt: 0.0,
            t2_star_width_table: vec![(0.0, 25.0), (10.0, 8.0), (20.0, 2.0), (30.0, 0.2)],
            odmr_linewidth_mhz: 15.0,
            zfs_offset_mhz: 0.0,
        }
    }
}

impl SpinSystemConfig {
    /// Zeeman slope g·μ_B/h for this configuration, MHz/mT.
    pub fn zeeman_slope(&self) -> f64 {
        zeeman_mhz_per_mt(self.g)
    }

    /// Inhomogeneous Gaussian width at field `b_mt`, MHz.
    pub fn t2_star_width(&self, b_mt: f64) -> f64 {
        let table = &self.t2_star_width_table;
        if table.is_empty() {
            return 0.0;
        }
        if b_mt <= table[0].0 {
            return table[0].1;
        }
        for w in table.windows(2) {
            let (b0, s0) = w[0];
            let (b1, s1) = w[1];
            if b_mt <= b1 {
                let t = (b_mt - b0) / (b1 - b0);
                return s0 + t * (s1 - s0);
            }
        }
        table.last().unwrap().1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_mhz > 0.0) {
            return Err(VbError::Config(format!("D must be positive, got {}", self.d_mhz)));
        }
        if self.e_mhz < 0.0 || self.e_mhz >= self.d_mhz {
            return Err(VbError::Config(format!(
                "E must satisfy 0 <= E < D, got E = {}, D = {}",
                self.e_mhz, self.d_mhz
            )));
        }
        if self.a_perp_mhz < 0.0 {
            return Err(VbError::Config(format!(
                "A_perp must be non-negative, got {}",
                self.a_perp_mhz
            )));
        }
        if self.n_nuclei > 3 {
            return Err(VbError::Config(format!(
                "n_nuclei must be 0..=3, got {}",
                self.n_nuclei
            )));
        }
        if !(self.t2_us > 0.0) || self.t1_us < self.t2_us / 2.0 {
            return Err(VbError::Config(format!(
                "relaxation times must satisfy T1 >= T2/2 > 0, got T1 = {}, T2 = {}",
                self.t1_us, self.t2_us
            )));
        }
        if self.b_mt < 0.0 {
            return Err(VbError::Config(format!("B must be non-negative, got {}", self.b_mt)));
        }
        if self.t2_star_width_table.iter().any(|&(_, s)| s < 0.0) {
            return Err(VbError::Config("width table entries must be non-negative".into()));
        }
        if self.odmr_linewidth_mhz <= 0.0 {
            return Err(VbError::Config(format!(
                "ODMR linewidth must be positive, got {}",
                self.odmr_linewidth_mhz
            )));
        }
        let bs: Vec<f64> = self.t2_star_width_table.iter().map(|&(b, _)| b).collect();
        if bs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(VbError::Config("width table fields must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// One classical assignment of the three nitrogen spin projections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NuclearConfiguration {
    /// Per-nucleus projections, each in {-1, 0, +1}.
    pub projections: Vec<i8>,
}

impl NuclearConfiguration {
    pub fn new(projections: Vec<i8>) -> Result<Self> {
        if projections.iter().any(|&p| !(-1..=1).contains(&p)) {
            return Err(VbError::Domain(
                "nuclear projections must lie in {-1, 0, +1}".into(),
            ));
        }
        Ok(NuclearConfiguration { projections })
    }

    /// Configuration with all projections zero, n nuclei.
    pub fn zeros(n: usize) -> Self {
        NuclearConfiguration { projections: vec![0; n] }
    }

    /// Σ_k m_I^(k).
    pub fn total_mi(&self) -> i32 {
        self.projections.iter().map(|&p| p as i32).sum()
    }

    /// Canonical configuration realising a given total projection
    /// (e.g. total 2 with three nuclei becomes (+1, +1, 0)).
    pub fn with_total(n: usize, total_mi: i32) -> Result<Self> {
        if total_mi.unsigned_abs() as usize > n {
            return Err(VbError::Domain(format!(
                "total m_I = {total_mi} is not reachable with {n} spin-1 nuclei"
            )));
        }
        let sign = if total_mi < 0 { -1i8 } else { 1i8 };
        let mut remaining = total_mi.abs();
        let projections = (0..n)
            .map(|_| {
                if remaining > 0 {
                    remaining -= 1;
                    sign
                } else {
                    0
                }
            })
            .collect();
        Ok(NuclearConfiguration { projections })
    }

    /// 1 / 3^n: every explicit configuration is equally likely.
    pub fn weight(&self) -> f64 {
        1.0 / 3f64.powi(self.projections.len() as i32)
    }

    /// Every one of the 3^n configurations, ordered to match the product
    /// basis of the full-quantum Hamiltonian (per-nucleus m descending, so
    /// index 0 is (+1, +1, ..., +1)).
    pub fn enumerate(n: usize) -> Vec<NuclearConfiguration> {
        let total = 3usize.pow(n as u32);
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut projections = vec![0i8; n];
            for p in projections.iter_mut().rev() {
                *p = 1 - (rem % 3) as i8;
                rem /= 3;
            }
            out.push(NuclearConfiguration { projections });
        }
        out
    }
}

/// A total-m_I sector with its multiplicity weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuclearSector {
    pub total_mi: i32,
    /// multiplicity / 3^n; sums to 1 over all sectors.
    pub weight: f64,
}

/// The 2·n·I + 1 total-projection sectors for n spin-1 nuclei.
///
/// For n = 3 the multiplicities follow 1:3:6:7:6:3:1.
pub fn nuclear_sectors(n: usize) -> Vec<NuclearSector> {
    // Convolve the single-nucleus distribution {1,1,1} n times.
    let mut mult = vec![1u32];
    for _ in 0..n {
        let mut next = vec![0u32; mult.len() + 2];
        for (i, &m) in mult.iter().enumerate() {
            for j in 0..3 {
                next[i + j] += m;
            }
        }
        mult = next;
    }
    let norm = 3f64.powi(n as i32);
    let max_mi = n as i32;
    mult.iter()
        .enumerate()
        .map(|(i, &m)| NuclearSector {
            total_mi: i as i32 - max_mi,
            weight: m as f64 / norm,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SpinSystemConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_inverted_splittings() {
        let cfg = SpinSystemConfig { e_mhz: 4000.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_t2_exceeding_twice_t1() {
        let cfg = SpinSystemConfig { t1_us: 0.01, t2_us: 0.1, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn width_table_interpolates_and_clamps() {
        let cfg = SpinSystemConfig::default();
        assert_eq!(cfg.t2_star_width(0.0), 25.0);
        assert!((cfg.t2_star_width(30.0) - 0.2).abs() < 1e-12);
        assert!((cfg.t2_star_width(100.0) - 0.2).abs() < 1e-12);
        let mid = cfg.t2_star_width(5.0);
        assert!(mid > 8.0 && mid < 25.0, "width(5 mT) = {mid}");
    }

    #[test]
    fn sector_multiplicities_follow_trinomial_counts() {
        let sectors = nuclear_sectors(3);
        let weights: Vec<f64> = sectors.iter().map(|s| s.weight * 27.0).collect();
        let expect = [1.0, 3.0, 6.0, 7.0, 6.0, 3.0, 1.0];
        assert_eq!(weights.len(), 7);
        for (w, e) in weights.iter().zip(expect.iter()) {
            assert!((w - e).abs() < 1e-12);
        }
        let total: f64 = sectors.iter().map(|s| s.weight).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sectors_match_explicit_enumeration() {
        for n in 0..=3usize {
            let sectors = nuclear_sectors(n);
            let configs = NuclearConfiguration::enumerate(n);
            assert_eq!(configs.len(), 3usize.pow(n as u32));
            for sector in sectors {
                let counted: f64 = configs
                    .iter()
                    .filter(|c| c.total_mi() == sector.total_mi)
                    .map(|c| c.weight())
                    .sum();
                assert!(
                    (counted - sector.weight).abs() < 1e-14,
                    "sector {} of n = {}",
                    sector.total_mi,
                    n
                );
            }
        }
    }

    #[test]
    fn projections_outside_range_rejected() {
        assert!(NuclearConfiguration::new(vec![0, 2, 0]).is_err());
    }
}
