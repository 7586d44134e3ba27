//! Seven-level optical pumping model: polarization and CW readout.
//!
//! Levels are ordered GS(+1, 0, −1), ES(+1, 0, −1), MS. The 532 nm pump
//! drives spin-conserving GS→ES transitions, fluorescence returns ES→GS,
//! and the spin selectivity lives in the inter-system crossings: m_s = ±1
//! excited states cross to the metastable singlet faster than m_s = 0, and
//! the singlet decays preferentially into m_s = 0. Microwave mixing between
//! ground-state sublevels therefore changes the fluorescence rate, which is
//! the ODMR signal.
//!
//! The rate values are engineering defaults (the optical lifetimes of the
//! defect are not inputs we fit); every number is configurable.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VbError};

const GS_P1: usize = 0;
const GS_0: usize = 1;
const GS_M1: usize = 2;
const ES_P1: usize = 3;
const ES_0: usize = 4;
const ES_M1: usize = 5;
const MS: usize = 6;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticalRateModel {
    /// GS→ES pump rate with the laser on, 1/µs.
    pub pump_rate: f64,
    /// ES→GS radiative rate, 1/µs.
    pub radiative_rate: f64,
    /// ES→MS crossing rate for m_s = 0, 1/µs.
    pub isc_ms0: f64,
    /// ES→MS crossing rate for m_s = ±1, 1/µs (larger than `isc_ms0`).
    pub isc_ms1: f64,
    /// MS→GS rate into m_s = 0, 1/µs.
    pub ms_to_gs0: f64,
    /// MS→GS rate into each of m_s = ±1, 1/µs (smaller than `ms_to_gs0`).
    pub ms_to_gs1: f64,
    /// Ground-state microwave mixing rate at full line strength, 1/µs.
    pub mw_mixing_rate: f64,
    /// Peak contrast scale of the pulsed readout.
    pub c_max: f64,
}

impl Default for OpticalRateModel {
    fn default() -> Self {
        OpticalRateModel {
            pump_rate: 40.0,
            radiative_rate: 800.0,
            isc_ms0: 200.0,
            isc_ms1: 400.0,
            ms_to_gs0: 50.0,
            ms_to_gs1: 25.0,
            mw_mixing_rate: 8.0,
            c_max: 0.03,
        }
    }
}

impl OpticalRateModel {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            self.pump_rate,
            self.radiative_rate,
            self.isc_ms0,
            self.isc_ms1,
            self.ms_to_gs0,
            self.ms_to_gs1,
            self.mw_mixing_rate,
        ];
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(VbError::Config("optical rates must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.c_max) {
            return Err(VbError::Config(format!("c_max must lie in [0, 1], got {}", self.c_max)));
        }
        Ok(())
    }

    /// Stationary populations of the seven levels under CW pumping with
    /// microwave mixing rates applied on the 0↔−1 and 0↔+1 ground pairs.
    pub fn steady_state(&self, mw_lower: f64, mw_upper: f64) -> Result<[f64; 7]> {
        if self.pump_rate <= 0.0 {
            return Err(VbError::Numerical(
                "steady state is degenerate with zero pump rate".into(),
            ));
        }
        let mut rates = DMatrix::<f64>::zeros(7, 7);
        let mut add = |from: usize, to: usize, rate: f64| {
            rates[(to, from)] += rate;
            rates[(from, from)] -= rate;
        };
        for (gs, es, isc) in [
            (GS_P1, ES_P1, self.isc_ms1),
            (GS_0, ES_0, self.isc_ms0),
            (GS_M1, ES_M1, self.isc_ms1),
        ] {
            add(gs, es, self.pump_rate);
            add(es, gs, self.radiative_rate);
            add(es, MS, isc);
        }
        add(MS, GS_0, self.ms_to_gs0);
        add(MS, GS_P1, self.ms_to_gs1);
        add(MS, GS_M1, self.ms_to_gs1);
        // Microwave population exchange, symmetric both ways.
        add(GS_0, GS_M1, mw_lower);
        add(GS_M1, GS_0, mw_lower);
        add(GS_0, GS_P1, mw_upper);
        add(GS_P1, GS_0, mw_upper);

        // Solve R·p = 0 with Σp = 1 by replacing the last balance row.
        let mut system = rates;
        for j in 0..7 {
            system[(6, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(7);
        b[6] = 1.0;
        let lu = system.lu();
        let p = lu
            .solve(&b)
            .ok_or_else(|| VbError::Numerical("singular optical rate system".into()))?;
        let mut out = [0.0; 7];
        for i in 0..7 {
            out[i] = p[i];
        }
        Ok(out)
    }

    /// Fluorescence rate ∝ radiative rate × total excited-state population.
    pub fn fluorescence(&self, populations: &[f64; 7]) -> f64 {
        self.radiative_rate * (populations[ES_P1] + populations[ES_0] + populations[ES_M1])
    }

    /// CW ODMR contrast (F_on − F_off)/F_off for the given mixing rates.
    /// Negative on resonance: microwave mixing dims the fluorescence.
    pub fn cw_contrast(&self, mw_lower: f64, mw_upper: f64) -> Result<f64> {
        let off = self.fluorescence(&self.steady_state(0.0, 0.0)?);
        let on = self.fluorescence(&self.steady_state(mw_lower, mw_upper)?);
        Ok((on - off) / off)
    }

    /// Ground-state m_s = 0 fraction after a long laser pulse: the CW steady
    /// state relaxed back to the ground manifold with the laser off (ES decays
    /// through radiative and ISC paths, the singlet through its branching).
    pub fn polarization_fidelity(&self) -> Result<f64> {
        let p = self.steady_state(0.0, 0.0)?;
        let mut gs = [p[GS_P1], p[GS_0], p[GS_M1]];
        let ms_branch_total = self.ms_to_gs0 + 2.0 * self.ms_to_gs1;
        let branch = [
            self.ms_to_gs1 / ms_branch_total,
            self.ms_to_gs0 / ms_branch_total,
            self.ms_to_gs1 / ms_branch_total,
        ];
        let mut ms_pop = p[MS];
        for (i, (es, isc)) in [
            (p[ES_P1], self.isc_ms1),
            (p[ES_0], self.isc_ms0),
            (p[ES_M1], self.isc_ms1),
        ]
        .into_iter()
        .enumerate()
        {
            let total = self.radiative_rate + isc;
            gs[i] += es * self.radiative_rate / total;
            ms_pop += es * isc / total;
        }
        for i in 0..3 {
            gs[i] += ms_pop * branch[i];
        }
        let total: f64 = gs.iter().sum();
        Ok(gs[1] / total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_state_is_normalised_and_positive() {
        let model = OpticalRateModel::default();
        let p = model.steady_state(0.0, 0.0).unwrap();
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x > 0.0), "populations {p:?}");
    }

    #[test]
    fn microwave_mixing_dims_the_fluorescence() {
        let model = OpticalRateModel::default();
        let contrast = model.cw_contrast(model.mw_mixing_rate, 0.0).unwrap();
        assert!(contrast < -1e-4, "contrast {contrast} should be a dip");
    }

    #[test]
    fn symmetric_crossings_give_zero_contrast() {
        let model = OpticalRateModel {
            isc_ms1: 200.0, // equal to isc_ms0
            ms_to_gs1: 50.0, // equal to ms_to_gs0
            ..OpticalRateModel::default()
        };
        let contrast = model.cw_contrast(model.mw_mixing_rate, 0.0).unwrap();
        assert!(contrast.abs() < 1e-12, "contrast {contrast}");
    }

    #[test]
    fn contrast_saturates_with_pump_rate() {
        // Oracle: steady-state solve over a pump grid. The contrast rises
        // with pump power, tops out and declines again, so around the
        // saturation point a doubling of the pump barely moves it.
        let base = OpticalRateModel::default();
        let contrast_at = |pump: f64| {
            let model = OpticalRateModel { pump_rate: pump, ..base.clone() };
            model.cw_contrast(model.mw_mixing_rate, 0.0).unwrap()
        };
        let mut flattest = f64::INFINITY;
        let mut pump = 0.01;
        while pump < 1.0e4 {
            let c1 = contrast_at(pump);
            let c2 = contrast_at(2.0 * pump);
            flattest = flattest.min(((c2 - c1) / c1).abs());
            pump *= 1.08;
        }
        assert!(
            flattest < 0.01,
            "no saturation plateau found: flattest doubling response {flattest:.3e}"
        );
    }

    #[test]
    fn zero_pump_is_degenerate() {
        let model = OpticalRateModel { pump_rate: 0.0, ..OpticalRateModel::default() };
        assert!(model.steady_state(0.0, 0.0).is_err());
    }

    #[test]
    fn laser_polarizes_into_ms0() {
        let model = OpticalRateModel::default();
        let p = model.polarization_fidelity().unwrap();
        assert!(p > 0.4 && p < 1.0, "polarization fidelity {p}");
        // Symmetric model cannot polarize.
        let flat = OpticalRateModel {
            isc_ms1: 200.0,
            ms_to_gs1: 50.0,
            ..OpticalRateModel::default()
        };
        let p_flat = flat.polarization_fidelity().unwrap();
        assert!((p_flat - 1.0 / 3.0).abs() < 1e-12, "unpolarized fidelity {p_flat}");
    }
}
