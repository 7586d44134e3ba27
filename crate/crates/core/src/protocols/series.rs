//! Tabulated protocol output: (x, y, σ_y) triples plus provenance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VbError};

/// One simulated or measured curve. `x` is µs, MHz, mT or √mW depending on
/// the protocol; `y` is contrast (dimensionless) or a fitted quantity.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DataSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_sigma: Option<Vec<f64>>,
    /// Protocol name and the full parameter record that produced the data.
    pub meta: BTreeMap<String, String>,
}

impl DataSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>, y_sigma: Option<Vec<f64>>) -> Result<Self> {
        let series = DataSeries { x, y, y_sigma, meta: BTreeMap::new() };
        series.validate()?;
        Ok(series)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() {
            return Err(VbError::Config(format!(
                "x and y lengths differ: {} vs {}",
                self.x.len(),
                self.y.len()
            )));
        }
        if let Some(s) = &self.y_sigma {
            if s.len() != self.x.len() {
                return Err(VbError::Config("y_sigma length differs from x".into()));
            }
            if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(VbError::Config("y_sigma entries must be non-negative".into()));
            }
        }
        if self.x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(VbError::Config("x values must be strictly increasing".into()));
        }
        if self.x.iter().chain(self.y.iter()).any(|v| !v.is_finite()) {
            return Err(VbError::Config("series contains non-finite values".into()));
        }
        Ok(())
    }
}

/// Evenly spaced grid helper: `n` points from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
        .collect()
}
