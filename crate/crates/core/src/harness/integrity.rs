//! Self-checks of the time integrators on the production grids.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GridPlan};
use super::report::{Flag, Thresholds};
use super::validation::PreparedRun;
use crate::dispersion::omega;
use crate::error::Result;
use crate::kg::{diagonalize, hamiltonian, undiagonalize, DiagonalState, DiagonalStepper, Scheme, SecondOrderStepper};
use crate::nls::NlsSolver;
use crate::spectral::{FourierGrid, SpectralField};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegritySettings {
    pub eps: f64,
    pub linear_steps: usize,
    /// End time of the two-formulation comparison and the halving study.
    pub compare_time: f64,
    /// Steps of the halving study are `dt0`, `dt0 / 2`, `dt0 / 4`.
    pub halving_dt: f64,
    pub hamiltonian_time: f64,
    pub nls_steps: usize,
}

impl Default for IntegritySettings {
    fn default() -> Self {
        Self { eps: 0.1, linear_steps: 1000, compare_time: 10.0, halving_dt: 0.2, hamiltonian_time: 100.0, nls_steps: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub settings: IntegritySettings,
    /// Largest coefficient error of a single linear mode against its exact phase.
    pub linear_error: f64,
    /// `max |u_diag - u_second|` at `compare_time`.
    pub formulation_difference: f64,
    /// `||u_dt - u_{dt/2}|| / ||u_{dt/2} - u_{dt/4}||`.
    pub halving_ratio: f64,
    pub hamiltonian_drift: f64,
    pub nls_mass_drift: f64,
    pub flags: Vec<Flag>,
}

impl IntegrityReport {
    pub fn passed(&self) -> bool {
        self.flags.iter().all(|f| f.pass)
    }
}

fn linear_error(grid: &Arc<FourierGrid>, j: i64, dt: f64, steps: usize) -> Result<f64> {
    let c = Complex64::new(0.3, -0.2);
    let pair = |a: Complex64| SpectralField::from_modes(grid.clone(), &[(j, a), (-j, a.conj())]);
    let d0 = DiagonalState { um1: pair(c)?, up1: pair(c.conj())?, t: 0.0 };
    let mut stepper = DiagonalStepper::new(grid.clone(), dt, Scheme::LawsonRk4)?.linear_only();
    let out = stepper.run(&d0, steps, steps, |_| Ok(()))?;
    let t = steps as f64 * dt;
    let w = omega(grid.dk() * j as f64);
    let expect_m1 = c * Complex64::from_polar(1.0, -w * t);
    let expect_p1 = c.conj() * Complex64::from_polar(1.0, w * t);
    Ok((out.um1.mode(j) - expect_m1).norm().max((out.up1.mode(j) - expect_p1).norm()))
}

fn diagonal_run(grid: &Arc<FourierGrid>, d0: &DiagonalState, dt: f64, t_end: f64, k_max: Option<f64>) -> Result<DiagonalState> {
    let steps = (t_end / dt).round() as usize;
    let mut stepper = DiagonalStepper::new(grid.clone(), dt, Scheme::LawsonRk4)?;
    if let Some(k) = k_max {
        stepper = stepper.with_wavenumber_limit(k);
    }
    stepper.run(d0, steps, steps, |_| Ok(()))
}

/// Linear exactness, formulation agreement, `dt` halving, Hamiltonian and NLS mass drift.
pub fn run_solver_integrity(cfg: &ExperimentConfig, settings: IntegritySettings) -> Result<IntegrityReport> {
    cfg.validate()?;
    let eps = settings.eps;
    let prep = PreparedRun::new(cfg, eps, 1, cfg.dt)?;
    let grid = prep.plan.fast.clone();
    let d0 = prep.initial_state()?;

    let linear_error = linear_error(&grid, prep.plan.wavelengths as i64, cfg.dt, settings.linear_steps)?;

    // both formulations without the extra truncation; the (u, w) stepper has none
    let diag = diagonal_run(&grid, &d0, cfg.dt, settings.compare_time, None)?;
    let steps = (settings.compare_time / cfg.dt).round() as usize;
    let second = SecondOrderStepper::new(grid.clone(), cfg.dt, Scheme::LawsonRk4)?.run(&undiagonalize(&d0)?, steps)?;
    let formulation_difference = (&diag.u() - &second.u).max_abs();
    // the round trip through (u, w) must also agree in the slots
    let slots = diagonalize(&second)?;
    let formulation_difference = formulation_difference
        .max((&slots.um1 - &diag.um1).max_abs())
        .max((&slots.up1 - &diag.up1).max_abs());

    let h = settings.halving_dt;
    let runs = [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&dt| diagonal_run(&grid, &d0, dt, settings.compare_time, cfg.k_max()).map(|d| d.u()))
        .collect::<Result<Vec<_>>>()?;
    let halving_ratio = (&runs[0] - &runs[1]).l2_norm() / (&runs[1] - &runs[2]).l2_norm();

    let h0 = hamiltonian(&undiagonalize(&d0)?)?;
    let late = diagonal_run(&grid, &d0, cfg.dt, settings.hamiltonian_time, cfg.k_max())?;
    let hamiltonian_drift = ((hamiltonian(&undiagonalize(&late)?)? - h0) / h0).abs();

    let plan = GridPlan::new(cfg, eps)?;
    let params = prep.coeffs.nls_params();
    let e0 = plan.initial_envelope(cfg.envelope, &params)?;
    let e1 = NlsSolver::new(params, cfg.dt_nls)?.advance_to(&e0, settings.nls_steps as f64 * cfg.dt_nls)?;
    let nls_mass_drift = ((e1.mass() - e0.mass()) / e0.mass()).abs();

    let th = Thresholds::default();
    let flags = vec![
        Flag::at_most("linear_exact", linear_error, th.linear_exact),
        Flag::at_most("formulation_agreement", formulation_difference, th.formulation_agreement),
        Flag::within("halving_ratio", halving_ratio, th.halving_ratio),
        Flag::at_most("hamiltonian_drift", hamiltonian_drift, th.hamiltonian_drift),
        Flag::at_most("nls_mass_drift", nls_mass_drift, th.nls_mass_drift),
    ];
    Ok(IntegrityReport {
        settings,
        linear_error,
        formulation_difference,
        halving_ratio,
        hamiltonian_drift,
        nls_mass_drift,
        flags,
    })
}
