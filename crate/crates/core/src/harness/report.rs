use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Pass/fail thresholds of the acceptance criteria.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub hs_slope: (f64, f64),
    pub hs_r2: f64,
    pub gap_slope: (f64, f64),
    pub residual_slope_min: f64,
    pub identity_relative: f64,
    pub equivalence: (f64, f64),
    pub gronwall_factor: f64,
    pub linear_exact: f64,
    pub formulation_agreement: f64,
    pub halving_ratio: (f64, f64),
    pub hamiltonian_drift: f64,
    pub nls_mass_drift: f64,
    pub band_gain: f64,
    /// Time-stepping error relative to the measured approximation error.
    pub dt_halving_relative: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            hs_slope: (1.35, 1.75),
            hs_r2: 0.98,
            gap_slope: (1.4, 1.6),
            residual_slope_min: 2.4,
            identity_relative: 1e-10,
            equivalence: (0.4, 1.1),
            gronwall_factor: 10.0,
            linear_exact: 1e-13,
            formulation_agreement: 1e-6,
            halving_ratio: (16.0 * 0.8, 16.0 * 1.2),
            hamiltonian_drift: 1e-6,
            nls_mass_drift: 1e-10,
            band_gain: 1.0,
            dt_halving_relative: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub name: String,
    pub value: f64,
    pub rule: String,
    pub pass: bool,
}

impl Flag {
    pub fn within(name: &str, value: f64, (lo, hi): (f64, f64)) -> Self {
        Self { name: name.into(), value, rule: format!("in [{lo}, {hi}]"), pass: value >= lo && value <= hi }
    }

    pub fn at_least(name: &str, value: f64, lo: f64) -> Self {
        Self { name: name.into(), value, rule: format!(">= {lo}"), pass: value >= lo }
    }

    pub fn positive(name: &str, value: f64) -> Self {
        Self { name: name.into(), value, rule: "> 0".into(), pass: value > 0.0 }
    }

    pub fn at_most(name: &str, value: f64, hi: f64) -> Self {
        Self { name: name.into(), value, rule: format!("<= {hi}"), pass: value <= hi }
    }
}

/// Plain CSV with a header row; numbers use `{:e}` so nothing is lost.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Self { text: columns.join(",") + "\n" }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, &self.text)?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_and_csv() {
        assert!(Flag::within("x", 1.5, (1.35, 1.75)).pass);
        assert!(!Flag::at_least("x", 0.9, 0.98).pass);
        assert!(Flag::at_most("x", 0.0, 0.0).pass);
        assert!(!Flag::at_most("x", f64::NAN, 1.0).pass);
        let mut c = Csv::new(&["eps", "value"]);
        c.row(&[0.1, 2.5]);
        assert_eq!(c.as_str(), "eps,value\n1e-1,2.5e0\n");
    }
}
