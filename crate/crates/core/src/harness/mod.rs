//! Experiment orchestration: grids per `eps`, sweeps, fits and reports.

mod config;
mod fit;
mod identities;
mod integrity;
mod nonresonance;
pub mod random;
mod report;
mod residual;
mod validation;

pub use config::{EnvelopeKind, ExperimentConfig, GridPlan};
pub use fit::{fit_power_law, ScalingFit};
pub use identities::{
    energy_equivalence, run_identity_suite, EquivalenceSummary, IdentityReport, SignPairMax, EQUIVALENCE_EPS,
    SIGN_PAIRS,
};
pub use integrity::{run_solver_integrity, IntegrityReport, IntegritySettings};
pub use nonresonance::{run_nonresonance_scan, NonresonanceReport, HARMONIC_M_MAX};
pub use report::{write_json, Csv, Flag, Thresholds};
pub use residual::{
    fit_nu2, run_certification, run_residual_sweep, BandOracle, CertificationReport, ResidualRecord, ResidualReport,
    SAMPLE_FRACTIONS,
};
pub use validation::{
    energy_flags, initial_residual, run_energy_trace, run_validation, run_validation_with, CheckpointRow, DtHalving, EnergySummary,
    EpsRecord, PreparedRun, SolverMode, SweepReport,
};
