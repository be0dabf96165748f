//! The approximation sweep: KG started from the cut second-order ansatz,
//! compared with `eps Psi_NLS` (first order) at checkpoints up to `T0 / eps^2`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GridPlan};
use super::fit::{fit_power_law, ScalingFit};
use super::report::{Flag, Thresholds};
use crate::approximation::{build_ansatz, compute_residual, AnsatzBundle, AnsatzOrder, CoefficientSet};
use crate::energy::{energy, energy_trace, extract_error, EnergyTrace, PsiData};
use crate::error::{Error, Result};
use crate::kg::{hamiltonian, undiagonalize, DiagonalState, DiagonalStepper, Scheme};
use crate::nls::{Envelope, NlsSolver};
use crate::spectral::{inverse_transform, sobolev_norm, SpectralField};

/// What produces the "solution" compared against `eps Psi_NLS`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    Kg,
    /// First-order ansatz plus a perturbation of `H^s` norm exactly `eps^{3/2}`;
    /// exercises the sweep and the fit without running the solver.
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub t: f64,
    pub hs_error: f64,
    pub linf_error: f64,
    /// Distance to the cut second-order ansatz, i.e. `eps^{5/2} ||R||`.
    pub hs_error_order2: f64,
    pub energy: f64,
    pub energy_modified: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub initial_modified: f64,
    pub sup_energy: f64,
    pub sup_modified: f64,
    /// `sup |E~ - E| / eps^2`.
    pub gap_constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtHalving {
    pub dt: f64,
    /// `sup_t ||u_dt - u_{dt/2}||_{H^s}`.
    pub sup_difference: f64,
    /// `sup_difference / sup_t ||u - eps Psi_NLS||_{H^s}`.
    pub relative_to_signal: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsRecord {
    pub eps: f64,
    pub n: usize,
    pub wavelengths: usize,
    pub dt: f64,
    pub t_end: f64,
    pub sup_hs_error: f64,
    pub sup_linf_error: f64,
    pub runtime_s: f64,
    pub hamiltonian_drift: f64,
    pub energy: Option<EnergySummary>,
    pub dt_halving: Option<DtHalving>,
    pub checkpoints: Vec<CheckpointRow>,
    /// Set when the run failed; the other numbers are then meaningless.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub mode: SolverMode,
    pub coefficients: CoefficientSet,
    pub records: Vec<EpsRecord>,
    pub fit_hs: Option<ScalingFit>,
    pub fit_linf: Option<ScalingFit>,
    /// Residual of the cut second-order ansatz at `t = 0` over the same `eps`.
    pub fit_residual: Option<ScalingFit>,
    pub flags: Vec<Flag>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.flags.iter().all(|f| f.pass)
    }
}

/// Grids, time step and envelopes for one `eps`, sampled at `intervals + 1`
/// equally spaced times in `[0, T0 / eps^2]`.
pub struct PreparedRun {
    pub plan: GridPlan,
    pub coeffs: CoefficientSet,
    pub dt: f64,
    pub steps_per_interval: usize,
    pub times: Vec<f64>,
    pub envelopes: Vec<Envelope>,
    pub k_max: Option<f64>,
    delta: f64,
}

impl PreparedRun {
    /// The step is the largest `<= dt_target` that divides the checkpoint spacing.
    pub fn new(cfg: &ExperimentConfig, eps: f64, intervals: usize, dt_target: f64) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidParameter("need at least one checkpoint interval".into()));
        }
        let plan = GridPlan::new(cfg, eps)?;
        let coeffs = cfg.coefficients()?;
        let t_end = cfg.t0 / (eps * eps);
        let spacing = t_end / intervals as f64;
        let steps_per_interval = (spacing / dt_target - 1e-9).ceil().max(1.0) as usize;
        let dt = spacing / steps_per_interval as f64;
        let times: Vec<f64> = (0..=intervals).map(|i| (i * steps_per_interval) as f64 * dt).collect();
        let slow_times: Vec<f64> = times.iter().map(|t| eps * eps * t).collect();
        let initial = plan.initial_envelope(cfg.envelope, &coeffs.nls_params())?;
        let envelopes = NlsSolver::new(coeffs.nls_params(), cfg.dt_nls)?.checkpoints(&initial, &slow_times)?;
        Ok(Self { plan, coeffs, dt, steps_per_interval, times, envelopes, k_max: cfg.k_max(), delta: cfg.delta() })
    }

    pub fn eps(&self) -> f64 {
        self.plan.eps
    }

    pub fn bundle(&self, i: usize, order: AnsatzOrder) -> Result<AnsatzBundle> {
        AnsatzBundle::new(order, self.plan.eps, self.coeffs, self.envelopes[i].clone(), Some(self.delta), self.plan.fast.clone())
    }

    /// Order-2 cut ansatz at `t = 0`, the initial data of every run.
    pub fn initial_state(&self) -> Result<DiagonalState> {
        build_ansatz(&self.bundle(0, AnsatzOrder::Second)?, 0.0)
    }

    /// Integrate with `substeps` steps per `dt`, calling `observe(i, state)` at checkpoint `i`.
    pub fn march(
        &self,
        scheme: Scheme,
        substeps: usize,
        mut observe: impl FnMut(usize, &DiagonalState) -> Result<()>,
    ) -> Result<DiagonalState> {
        let d0 = self.initial_state()?;
        let mut stepper = DiagonalStepper::new(self.plan.fast.clone(), self.dt / substeps as f64, scheme)?;
        if let Some(k) = self.k_max {
            stepper = stepper.with_wavenumber_limit(k);
        }
        let stride = self.steps_per_interval * substeps;
        let steps = stride * (self.times.len() - 1);
        let mut i = 0;
        stepper.run(&d0, steps, stride, |d| {
            // the stepper's clock and ours differ only by rounding
            let snapped = DiagonalState { t: self.times[i], ..d.clone() };
            observe(i, &snapped)?;
            i += 1;
            Ok(())
        })
    }
}

fn linf(f: &SpectralField) -> Result<f64> {
    Ok(inverse_transform(f)?.max_abs())
}

fn synthetic_perturbation(plan: &GridPlan, s: f64) -> Result<SpectralField> {
    // one smooth pair at the carrier, unit H^s norm
    let j = plan.wavelengths as i64;
    let c = num_complex::Complex64::new(0.5, 0.0);
    let f = SpectralField::from_modes(plan.fast.clone(), &[(j, c), (-j, c)])?;
    Ok(f.scale(1.0 / sobolev_norm(&f, s)?))
}

struct RunOutput {
    rows: Vec<CheckpointRow>,
    states: Vec<SpectralField>,
    hamiltonian_drift: f64,
}

fn run_one(cfg: &ExperimentConfig, prep: &PreparedRun, mode: SolverMode, substeps: usize, with_energy: bool) -> Result<RunOutput> {
    let eps = prep.eps();
    let s = cfg.s as f64;
    let mut rows = Vec::with_capacity(prep.times.len());
    let mut states = Vec::with_capacity(prep.times.len());
    let mut record = |i: usize, d: &DiagonalState| -> Result<()> {
        let t = prep.times[i];
        let second = prep.bundle(i, AnsatzOrder::Second)?;
        let first = build_ansatz(&second.with_order(AnsatzOrder::First), t)?;
        let reference = first.u();
        let diff = &d.u() - &reference;
        let ansatz2 = build_ansatz(&second, t)?;
        let (e, em) = if with_energy {
            let err = extract_error(d, &ansatz2, eps)?;
            let b = energy(&err, &PsiData::from_ansatz(&second, t)?, cfg.s)?;
            (b.e_total, b.e_modified)
        } else {
            (f64::NAN, f64::NAN)
        };
        rows.push(CheckpointRow {
            t,
            hs_error: sobolev_norm(&diff, s)?,
            linf_error: linf(&diff)?,
            hs_error_order2: sobolev_norm(&(&d.u() - &ansatz2.u()), s)?,
            energy: e,
            energy_modified: em,
        });
        states.push(d.u());
        Ok(())
    };
    let hamiltonian_drift = match mode {
        SolverMode::Kg => {
            let d0 = prep.initial_state()?;
            let h0 = hamiltonian(&undiagonalize(&d0)?)?;
            let last = prep.march(Scheme::LawsonRk4, substeps, &mut record)?;
            let h1 = hamiltonian(&undiagonalize(&last)?)?;
            ((h1 - h0) / h0).abs()
        }
        SolverMode::Synthetic => {
            let bump = synthetic_perturbation(&prep.plan, s)?.scale(eps.powf(1.5));
            for (i, &t) in prep.times.iter().enumerate() {
                let first = build_ansatz(&prep.bundle(i, AnsatzOrder::First)?, t)?;
                let fake = DiagonalState { um1: &first.um1 + &bump, up1: first.up1.clone(), t };
                record(i, &fake)?;
            }
            0.0
        }
    };
    Ok(RunOutput { rows, states, hamiltonian_drift })
}

fn sup(rows: &[CheckpointRow], f: impl Fn(&CheckpointRow) -> f64) -> f64 {
    rows.iter().map(f).fold(0.0, f64::max)
}

fn eps_record(cfg: &ExperimentConfig, eps: f64, mode: SolverMode, dt_halving: bool) -> EpsRecord {
    let start = Instant::now();
    let mut rec = EpsRecord {
        eps,
        n: 0,
        wavelengths: 0,
        dt: 0.0,
        t_end: cfg.t0 / (eps * eps),
        sup_hs_error: f64::NAN,
        sup_linf_error: f64::NAN,
        runtime_s: 0.0,
        hamiltonian_drift: f64::NAN,
        energy: None,
        dt_halving: None,
        checkpoints: Vec::new(),
        failure: None,
    };
    let result = (|| -> Result<()> {
        let prep = PreparedRun::new(cfg, eps, cfg.checkpoints, cfg.dt)?;
        rec.n = prep.plan.fast.n();
        rec.wavelengths = prep.plan.wavelengths;
        rec.dt = prep.dt;
        let out = run_one(cfg, &prep, mode, 1, true)?;
        rec.sup_hs_error = sup(&out.rows, |r| r.hs_error);
        rec.sup_linf_error = sup(&out.rows, |r| r.linf_error);
        rec.hamiltonian_drift = out.hamiltonian_drift;
        rec.energy = Some(EnergySummary {
            initial_modified: out.rows[0].energy_modified,
            sup_energy: sup(&out.rows, |r| r.energy),
            sup_modified: out.rows.iter().map(|r| r.energy_modified).fold(f64::NEG_INFINITY, f64::max),
            gap_constant: sup(&out.rows, |r| (r.energy_modified - r.energy).abs()) / (eps * eps),
        });
        if dt_halving && mode == SolverMode::Kg {
            let fine = run_one(cfg, &prep, mode, 2, false)?;
            let mut worst = 0.0f64;
            for (a, b) in out.states.iter().zip(&fine.states) {
                worst = worst.max(sobolev_norm(&(a - b), cfg.s as f64)?);
            }
            rec.dt_halving =
                Some(DtHalving { dt: prep.dt, sup_difference: worst, relative_to_signal: worst / rec.sup_hs_error });
        }
        rec.checkpoints = out.rows;
        Ok(())
    })();
    if let Err(e) = result {
        rec.failure = Some(e.to_string());
    }
    rec.runtime_s = start.elapsed().as_secs_f64();
    rec
}

/// Residual of the cut second-order ansatz at `t = 0` in `H^s`.
pub fn initial_residual(cfg: &ExperimentConfig, eps: f64) -> Result<f64> {
    let plan = GridPlan::new(cfg, eps)?;
    let coeffs = cfg.coefficients()?;
    let env = plan.initial_envelope(cfg.envelope, &coeffs.nls_params())?;
    compute_residual(&plan.bundle(cfg, coeffs, env, AnsatzOrder::Second)?, 0.0)?.norm(cfg.s as f64)
}

pub fn run_validation(cfg: &ExperimentConfig) -> Result<SweepReport> {
    run_validation_with(cfg, SolverMode::Kg, false)
}

pub fn run_validation_with(cfg: &ExperimentConfig, mode: SolverMode, dt_halving: bool) -> Result<SweepReport> {
    cfg.validate()?;
    let coefficients = cfg.coefficients()?;
    let records: Vec<EpsRecord> = cfg.eps_list.par_iter().map(|&eps| eps_record(cfg, eps, mode, dt_halving)).collect();
    let alive: Vec<&EpsRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
    if alive.len() < 3 {
        return Err(Error::Fit(format!("only {} of {} eps values survived", alive.len(), records.len())));
    }
    let fit_hs = fit_power_law(&alive.iter().map(|r| (r.eps, r.sup_hs_error)).collect::<Vec<_>>())?;
    let fit_linf = fit_power_law(&alive.iter().map(|r| (r.eps, r.sup_linf_error)).collect::<Vec<_>>())?;
    let residuals = cfg
        .eps_list
        .iter()
        .map(|&e| initial_residual(cfg, e).map(|r| (e, r)))
        .collect::<Result<Vec<_>>>()?;
    let fit_residual = fit_power_law(&residuals)?;

    let th = Thresholds::default();
    let mut flags = vec![
        Flag::within("hs_slope", fit_hs.slope, th.hs_slope),
        Flag::at_least("hs_r2", fit_hs.r2, th.hs_r2),
    ];
    if records.len() != alive.len() {
        flags.push(Flag::at_most("failed_eps", (records.len() - alive.len()) as f64, 0.0));
    }
    for r in &records {
        if let Some(h) = &r.dt_halving {
            flags.push(Flag::at_most(&format!("dt_halving_eps_{}", r.eps), h.relative_to_signal, th.dt_halving_relative));
        }
    }
    Ok(SweepReport {
        config: cfg.clone(),
        mode,
        coefficients,
        records,
        fit_hs: Some(fit_hs),
        fit_linf: Some(fit_linf),
        fit_residual: Some(fit_residual),
        flags,
    })
}

/// Dense energy trace along one production run; checkpoints at most `max_spacing` apart.
pub fn run_energy_trace(cfg: &ExperimentConfig, eps: f64, max_spacing: f64) -> Result<EnergyTrace> {
    cfg.validate()?;
    let t_end = cfg.t0 / (eps * eps);
    let intervals = (t_end / max_spacing - 1e-9).ceil() as usize;
    let prep = PreparedRun::new(cfg, eps, intervals, cfg.dt)?;
    let mut points = Vec::with_capacity(intervals + 1);
    prep.march(Scheme::LawsonRk4, 1, |i, d| {
        let t = prep.times[i];
        let b = prep.bundle(i, AnsatzOrder::Second)?;
        let err = extract_error(d, &build_ansatz(&b, t)?, eps)?;
        let e = energy(&err, &PsiData::from_ansatz(&b, t)?, cfg.s)?;
        points.push((t, e.e_total, e.e_modified));
        Ok(())
    })?;
    energy_trace(eps, cfg.s, &points)
}

/// `sup E~ <= factor (E~(0) + 1)` and a finite growth ratio.
pub fn energy_flags(trace: &EnergyTrace) -> Vec<Flag> {
    let th = Thresholds::default();
    vec![
        Flag::at_most("sup_modified_energy", trace.sup_modified, th.gronwall_factor * (trace.initial_modified + 1.0)),
        Flag::at_most("sup_abs_ratio_finite", trace.sup_abs_ratio, f64::MAX),
    ]
}
