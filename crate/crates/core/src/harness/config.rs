use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::approximation::{derive_coefficients, AnsatzBundle, AnsatzOrder, CoefficientSet};
use crate::error::{Error, Result};
use crate::nls::{gaussian_profile, sech_profile, Envelope, NlsParams, Soliton};
use crate::spectral::FourierGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// `A(X, 0) = sech(X)`.
    Sech,
    /// `A(X, 0) = exp(-X^2 / 2)`.
    Gaussian,
    /// Bright soliton with `eta = 1`; needs a focusing equation.
    Soliton,
}

/// Parameters of a sweep. Unknown keys are rejected when parsing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k0: f64,
    pub s: u32,
    #[serde(rename = "T0")]
    pub t0: f64,
    pub eps_list: Vec<f64>,
    pub envelope: EnvelopeKind,
    /// Carrier periods in the box; 0 picks the smallest count with `L >= envelope_extent / eps`.
    pub domain_wavelengths: usize,
    /// Required `eps L`.
    pub envelope_extent: f64,
    pub dt: f64,
    #[serde(rename = "dT_nls")]
    pub dt_nls: f64,
    /// Band half-width of the cutoff; `None` means `k0 / 4`.
    pub cutoff_delta: Option<f64>,
    pub checkpoints: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub points_per_wavelength: usize,
    /// Galerkin truncation of the KG quadratic term at `|k| <= k_max_over_k0 * k0`;
    /// `None` keeps every mode allowed by the 2/3 rule.
    pub k_max_over_k0: Option<f64>,
    pub slow_modes: usize,
    /// Random trials per identity and sign pair.
    pub trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k0: 1.0,
            s: 6,
            t0: 1.0,
            eps_list: vec![0.2, 0.141, 0.1, 0.071, 0.05],
            envelope: EnvelopeKind::Sech,
            domain_wavelengths: 0,
            envelope_extent: 40.0,
            dt: 0.05,
            dt_nls: 0.005,
            cutoff_delta: None,
            checkpoints: 64,
            seed: 0x5eed_0001,
            output_dir: PathBuf::from("out"),
            points_per_wavelength: 16,
            k_max_over_k0: Some(8.0 / 3.0),
            slow_modes: 256,
            trials: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn delta(&self) -> f64 {
        self.cutoff_delta.unwrap_or(0.25 * self.k0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return bad(format!("k0 must be positive, got {}", self.k0));
        }
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad(format!("T0 must be positive, got {}", self.t0));
        }
        if self.eps_list.is_empty() {
            return bad("eps_list is empty".into());
        }
        for w in self.eps_list.windows(2) {
            if !(w[1] < w[0]) {
                return bad(format!("eps_list must be strictly decreasing ({} then {})", w[0], w[1]));
            }
        }
        if let Some(e) = self.eps_list.iter().find(|e| !(**e > 0.0 && **e < 0.5)) {
            return bad(format!("every eps must lie in (0, 0.5), got {e}"));
        }
        if !(self.dt > 0.0 && self.dt <= crate::kg::MAX_DT) {
            return bad(format!("dt must lie in (0, {}], got {}", crate::kg::MAX_DT, self.dt));
        }
        if !(self.dt_nls > 0.0 && self.dt_nls.is_finite()) {
            return bad(format!("dT_nls must be positive, got {}", self.dt_nls));
        }
        let d = self.delta();
        if !(d > 0.0 && d < 0.5 * self.k0) {
            return bad(format!("cutoff_delta must lie in (0, k0/2), got {d}"));
        }
        if self.checkpoints == 0 {
            return bad("checkpoints must be positive".into());
        }
        if !(self.envelope_extent > 0.0) {
            return bad("envelope_extent must be positive".into());
        }
        if self.points_per_wavelength < 8 {
            return bad("points_per_wavelength must be at least 8".into());
        }
        if let Some(r) = self.k_max_over_k0 {
            // the cut ansatz reaches 2 k0 + delta
            if !(r.is_finite() && r * self.k0 > 2.0 * self.k0 + d) {
                return bad(format!("k_max_over_k0 = {r} does not contain the ansatz bands"));
            }
        }
        if self.slow_modes < 256 || !self.slow_modes.is_power_of_two() {
            return bad("slow_modes must be a power of two >= 256".into());
        }
        for &eps in &self.eps_list {
            let plan = GridPlan::new(self, eps)?;
            if plan.fast.length() * eps < self.envelope_extent * (1.0 - 1e-12) {
                return bad(format!(
                    "domain_wavelengths = {} gives eps L = {} < {} at eps = {eps}",
                    self.domain_wavelengths,
                    plan.fast.length() * eps,
                    self.envelope_extent
                ));
            }
        }
        Ok(())
    }

    pub fn k_max(&self) -> Option<f64> {
        self.k_max_over_k0.map(|r| r * self.k0)
    }

    pub fn coefficients(&self) -> Result<CoefficientSet> {
        derive_coefficients(self.k0)
    }
}

/// Fast and slow grids for one `eps`.
#[derive(Clone, Debug)]
pub struct GridPlan {
    pub eps: f64,
    /// Carrier periods in the box; `k0` is fast mode `wavelengths`.
    pub wavelengths: usize,
    pub fast: Arc<FourierGrid>,
    pub slow: Arc<FourierGrid>,
}

impl GridPlan {
    pub fn new(cfg: &ExperimentConfig, eps: f64) -> Result<Self> {
        let m = if cfg.domain_wavelengths > 0 {
            cfg.domain_wavelengths
        } else {
            (cfg.envelope_extent * cfg.k0 / (2.0 * std::f64::consts::PI * eps) - 1e-9).ceil() as usize
        };
        let slow_n = cfg.slow_modes;
        // room for the second harmonic of the slow band, and >= ppw points per carrier period
        let need = (cfg.points_per_wavelength * m).max(2 * (slow_n / 2 + 2 * m + 2));
        let n = need.next_power_of_two();
        let fast = FourierGrid::for_carrier(cfg.k0, m, n)?;
        let slow = FourierGrid::new(slow_n, eps * fast.length())?;
        Ok(Self { eps, wavelengths: m, fast, slow })
    }

    /// Initial envelope on the slow grid.
    pub fn initial_envelope(&self, kind: EnvelopeKind, params: &NlsParams) -> Result<Envelope> {
        match kind {
            EnvelopeKind::Sech => Envelope::from_profile(self.slow.clone(), 0.0, sech_profile),
            EnvelopeKind::Gaussian => Envelope::from_profile(self.slow.clone(), 0.0, gaussian_profile(1.0)),
            EnvelopeKind::Soliton => Soliton::new(*params, 1.0)?.envelope(self.slow.clone(), 0.0),
        }
    }

    pub fn bundle(
        &self,
        cfg: &ExperimentConfig,
        coeffs: CoefficientSet,
        envelope: Envelope,
        order: AnsatzOrder,
    ) -> Result<AnsatzBundle> {
        AnsatzBundle::new(order, self.eps, coeffs, envelope, Some(cfg.delta()), self.fast.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let p = GridPlan::new(&cfg, 0.05).unwrap();
        assert_eq!(p.wavelengths, 128);
        assert_eq!(p.fast.n(), 2048);
        assert!(p.fast.length() * 0.05 >= 40.0);
        assert_eq!(p.fast.wavenumber(128), 1.0);
        let p = GridPlan::new(&cfg, 0.2).unwrap();
        assert_eq!(p.fast.n(), 512);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = ExperimentConfig { eps_list: vec![0.2, 0.2, 0.1], ..Default::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.eps_list = vec![];
        assert!(cfg.validate().is_err());
        cfg.eps_list = vec![0.6, 0.1];
        assert!(cfg.validate().is_err());
        cfg.eps_list = vec![0.1];
        cfg.domain_wavelengths = 3;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"k0": 1.0, "bogus": 3}"#).is_err());
        let parsed = ExperimentConfig::from_json(r#"{"eps_list": [0.2, 0.1, 0.05], "T0": 0.5}"#).unwrap();
        assert_eq!(parsed.t0, 0.5);
    }
}
