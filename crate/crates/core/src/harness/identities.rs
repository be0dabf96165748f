//! Seeded random trials of the normal-form, adjoint and integration-by-parts
//! identities, and the energy-equivalence sampling.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GridPlan};
use super::random::{random_band_field, random_band_psi, random_unit_field, trial_rng};
use super::report::{Flag, Thresholds};
use crate::approximation::AnsatzOrder;
use crate::energy::{
    apply_g, apply_n, check_adjoint_identity, check_normal_form_identity, check_parts_identities, energy, ErrorPair,
    PsiData,
};
use crate::error::{Error, Result};
use crate::spectral::{dealiased_product, sobolev_norm, FourierGrid};

pub const SIGN_PAIRS: [(i32, i32); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Carrier periods and points of the identity grid (`dk = k0 / 16`).
const IDENTITY_WAVELENGTHS: usize = 16;
const IDENTITY_N: usize = 256;

/// `eps` of the energy-equivalence sampling.
pub const EQUIVALENCE_EPS: f64 = 0.05;

/// Streams `>= EQUIVALENCE_STREAM` feed the equivalence trials.
const EQUIVALENCE_STREAM: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignPairMax {
    pub j1: i32,
    pub j2: i32,
    pub max_relative: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSummary {
    pub eps: f64,
    pub trials: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub trials: usize,
    pub normal_form: Vec<SignPairMax>,
    pub adjoint: Vec<SignPairMax>,
    /// Worst relative discrepancy of `int a f f' = -1/2 int a' f^2`.
    pub parts_single: f64,
    /// Worst relative discrepancy of the mixed rearrangement with explicit remainders.
    pub parts_mixed: f64,
    /// Largest `||N_jj(psi, f) + j (G_jj psi f)'||_{L2} / (||psi||_{L2} ||f||_{L2})`; reported only.
    pub splitting_constant: f64,
    pub equivalence: EquivalenceSummary,
    pub flags: Vec<Flag>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.flags.iter().all(|f| f.pass)
    }
}

struct Trial {
    normal_form: [f64; 4],
    adjoint: [f64; 4],
    parts_single: f64,
    parts_mixed: f64,
    splitting: f64,
}

fn identity_trial(grid: &Arc<FourierGrid>, cfg: &ExperimentConfig, trial: u64) -> Result<Trial> {
    let mut rng = trial_rng(cfg.seed, trial);
    let psi = PsiData::new(random_band_psi(grid, &mut rng, cfg.k0, cfg.delta(), 2));
    // keep psi * f inside the dealiased band
    let f_modes = grid.dealias_limit() - psi.max_mode();
    let f = random_band_field(grid, &mut rng, f_modes);
    let g = random_band_field(grid, &mut rng, f_modes);
    let (am, ap) = (random_band_field(grid, &mut rng, psi.max_mode()), random_band_field(grid, &mut rng, psi.max_mode()));

    let mut normal_form = [0.0; 4];
    let mut adjoint = [0.0; 4];
    for (i, &(j1, j2)) in SIGN_PAIRS.iter().enumerate() {
        normal_form[i] = check_normal_form_identity(&psi, &f, j1, j2)?.relative();
        adjoint[i] = check_adjoint_identity(&psi, &f, &g, j1, j2)?.relative();
    }
    let parts = check_parts_identities((&am, &ap), (&f, &g))?;

    let mut splitting = 0.0f64;
    for j in [-1, 1] {
        let gf = dealiased_product(&apply_g(&psi, &psi.psi_hat, j, j)?, &f)?;
        let q = &apply_n(&psi, &f, j, j)? + &gf.derivative(1).scale(j as f64);
        splitting = splitting.max(q.l2_norm() / (psi.psi_hat.l2_norm() * f.l2_norm()));
    }
    Ok(Trial {
        normal_form,
        adjoint,
        parts_single: parts.single.relative(),
        parts_mixed: parts.mixed.relative(),
        splitting,
    })
}

/// `sqrt(E_s) / (||R_1||_{H^s} + ||R_{-1}||_{H^s})` for `trials` random unit
/// pairs on modes `1 <= |j| <= n/3`, with `psi` the cut order-2 ansatz at `t = 0`.
pub fn energy_equivalence(cfg: &ExperimentConfig, eps: f64, trials: usize) -> Result<EquivalenceSummary> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let plan = GridPlan::new(cfg, eps)?;
    let coeffs = cfg.coefficients()?;
    let env = plan.initial_envelope(cfg.envelope, &coeffs.nls_params())?;
    let psi = PsiData::from_ansatz(&plan.bundle(cfg, coeffs, env, AnsatzOrder::Second)?, 0.0)?;
    let grid = plan.fast.clone();
    let s = cfg.s as f64;
    let ratios = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(cfg.seed, EQUIVALENCE_STREAM + t);
            let r_m1 = random_unit_field(&grid, &mut rng, grid.dealias_limit(), s);
            let r_p1 = random_unit_field(&grid, &mut rng, grid.dealias_limit(), s);
            let denom = sobolev_norm(&r_m1, s)? + sobolev_norm(&r_p1, s)?;
            let e = energy(&ErrorPair { r_m1, r_p1, eps, t: 0.0 }, &psi, cfg.s)?;
            Ok(e.e_total.max(0.0).sqrt() / denom)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EquivalenceSummary {
        eps,
        trials,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_ratio: ratios.iter().sum::<f64>() / trials as f64,
    })
}

/// `cfg.trials` trials of every identity and sign pair plus the equivalence
/// sampling at `eps = 0.05`. The report is bit-identical for a given seed.
pub fn run_identity_suite(cfg: &ExperimentConfig) -> Result<IdentityReport> {
    if cfg.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    if !(cfg.k0 > 0.0 && cfg.k0.is_finite()) {
        return Err(Error::Config(format!("k0 must be positive, got {}", cfg.k0)));
    }
    let grid = FourierGrid::for_carrier(cfg.k0, IDENTITY_WAVELENGTHS, IDENTITY_N)?;
    let trials = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| identity_trial(&grid, cfg, t))
        .collect::<Result<Vec<_>>>()?;

    let worst = |f: &dyn Fn(&Trial) -> f64| trials.iter().map(f).fold(0.0f64, f64::max);
    let per_pair = |f: &dyn Fn(&Trial, usize) -> f64| -> Vec<SignPairMax> {
        SIGN_PAIRS
            .iter()
            .enumerate()
            .map(|(i, &(j1, j2))| SignPairMax { j1, j2, max_relative: worst(&|t| f(t, i)) })
            .collect()
    };
    let normal_form = per_pair(&|t, i| t.normal_form[i]);
    let adjoint = per_pair(&|t, i| t.adjoint[i]);
    let parts_single = worst(&|t| t.parts_single);
    let parts_mixed = worst(&|t| t.parts_mixed);
    let equivalence = energy_equivalence(cfg, EQUIVALENCE_EPS, cfg.trials)?;

    let th = Thresholds::default();
    let mut flags = Vec::new();
    for p in &normal_form {
        flags.push(Flag::at_most(&format!("normal_form ({}, {})", p.j1, p.j2), p.max_relative, th.identity_relative));
    }
    for p in &adjoint {
        flags.push(Flag::at_most(&format!("adjoint ({}, {})", p.j1, p.j2), p.max_relative, th.identity_relative));
    }
    flags.push(Flag::at_most("parts_single", parts_single, th.identity_relative));
    flags.push(Flag::at_most("parts_mixed", parts_mixed, th.identity_relative));
    flags.push(Flag::within("equivalence_min", equivalence.min_ratio, th.equivalence));
    flags.push(Flag::within("equivalence_max", equivalence.max_ratio, th.equivalence));
    Ok(IdentityReport {
        seed: cfg.seed,
        trials: cfg.trials,
        normal_form,
        adjoint,
        parts_single,
        parts_mixed,
        splitting_constant: worst(&|t| t.splitting),
        equivalence,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_repeats() {
        let cfg = ExperimentConfig { trials: 4, ..Default::default() };
        let a = run_identity_suite(&cfg).unwrap();
        assert!(a.passed(), "{:?}", a.flags);
        let b = run_identity_suite(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.splitting_constant.is_finite());
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = ExperimentConfig { trials: 0, ..Default::default() };
        assert!(matches!(run_identity_suite(&cfg), Err(Error::Config(_))));
    }
}
