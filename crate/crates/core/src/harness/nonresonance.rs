use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::report::Flag;
use crate::dispersion::{harmonic_nonresonance, nonresonance_constant, NonresonanceScan, DEFAULT_SCAN_DENSITY};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonresonanceReport {
    pub k0: f64,
    /// Support radius of the cut ansatz, `2 k0 + delta`.
    pub support_k1: f64,
    pub scans: Vec<NonresonanceScan>,
    /// `(m, |m omega(k0) - omega(m k0)|)`.
    pub harmonic_gaps: Vec<(u32, f64)>,
    pub flags: Vec<Flag>,
}

impl NonresonanceReport {
    pub fn passed(&self) -> bool {
        self.flags.iter().all(|f| f.pass)
    }
}

pub const HARMONIC_M_MAX: u32 = 10;

/// Scans at the ansatz support radius and at `k1 = 1, 2, 3, 4, 5` (times `k0`).
pub fn run_nonresonance_scan(cfg: &ExperimentConfig) -> Result<NonresonanceReport> {
    cfg.validate()?;
    let k0 = cfg.k0;
    let support_k1 = 2.0 * k0 + cfg.delta();
    let mut radii = vec![support_k1];
    radii.extend((1..=5).map(|j| j as f64 * k0));
    let scans = radii
        .iter()
        .map(|&k1| nonresonance_constant(k0, k1, DEFAULT_SCAN_DENSITY))
        .collect::<Result<Vec<_>>>()?;
    let harmonic_gaps = harmonic_nonresonance(k0, HARMONIC_M_MAX)?;
    let mut flags = vec![Flag::positive("support_constant", scans[0].constant)];
    let ladder = &scans[1..];
    let decreasing = ladder.windows(2).all(|w| w[1].constant < w[0].constant);
    flags.push(Flag::at_least("decreasing_in_k1", if decreasing { 1.0 } else { 0.0 }, 1.0));
    let min_gap = harmonic_gaps.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    flags.push(Flag::positive("min_harmonic_gap", min_gap));
    Ok(NonresonanceReport { k0, support_k1, scans, harmonic_gaps, flags })
}
