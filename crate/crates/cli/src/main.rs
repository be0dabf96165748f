use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nlskg::approximation::nu2_closed_form;
use nlskg::harness::{
    energy_flags, run_certification, run_energy_trace, run_identity_suite, run_nonresonance_scan, run_residual_sweep,
    run_validation_with, write_json, Csv, ExperimentConfig, Flag, SolverMode,
};

#[derive(Parser)]
#[command(name = "nlskg", version, about = "NLS approximation experiments for a quasilinear Klein-Gordon equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON config; unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma separated list of eps (the first entry for `energy-check`).
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, global = true)]
    k0: Option<f64>,
    #[arg(long, global = true)]
    s: Option<u32>,
    #[arg(long = "T0", global = true)]
    t0: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Repeat every run with dt/2 and flag the change.
    #[arg(long, global = true)]
    dt_halving_check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep over eps: sup_t ||u - eps Psi_NLS||_{H^s} and its fitted exponent.
    Validate {
        /// Replace the solver by ansatz plus a known eps^{3/2} perturbation.
        #[arg(long)]
        synthetic: bool,
    },
    /// Residual and ansatz-gap scaling, band certification of the coefficients.
    Residual,
    /// Energy and modified energy along one run.
    EnergyCheck {
        /// Largest spacing of the energy samples.
        #[arg(long, default_value_t = 0.5)]
        spacing: f64,
    },
    /// Seeded random trials of the operator identities and the energy equivalence.
    Identities,
    /// Nonresonance constants and harmonic gaps.
    Nonresonance,
    /// Print the derived coefficients.
    Coeffs,
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(e) = &c.eps {
        cfg.eps_list = e.clone();
    }
    if let Some(k0) = c.k0 {
        cfg.k0 = k0;
    }
    if let Some(s) = c.s {
        cfg.s = s;
    }
    if let Some(t0) = c.t0 {
        cfg.t0 = t0;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn print_flags(flags: &[Flag]) -> bool {
    for f in flags {
        println!("{} {} = {:e} ({})", if f.pass { "PASS" } else { "FAIL" }, f.name, f.value, f.rule);
    }
    flags.iter().all(|f| f.pass)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = load_config(&cli.common)?;
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let path = |name: &str| -> PathBuf { Path::new(&out).join(name) };

    let flags = match cli.command {
        Command::Validate { synthetic } => {
            let mode = if synthetic { SolverMode::Synthetic } else { SolverMode::Kg };
            let r = run_validation_with(&cfg, mode, cli.common.dt_halving_check)?;
            let mut sweep = Csv::new(&["eps", "n", "dt", "sup_hs_error", "sup_linf_error", "hamiltonian_drift", "runtime_s"]);
            let mut points =
                Csv::new(&["eps", "t", "hs_error", "linf_error", "hs_error_order2", "energy", "energy_modified"]);
            for rec in &r.records {
                sweep.row(&[rec.eps, rec.n as f64, rec.dt, rec.sup_hs_error, rec.sup_linf_error, rec.hamiltonian_drift, rec.runtime_s]);
                for c in &rec.checkpoints {
                    points.row(&[rec.eps, c.t, c.hs_error, c.linf_error, c.hs_error_order2, c.energy, c.energy_modified]);
                }
                if let Some(f) = &rec.failure {
                    eprintln!("eps = {}: {f}", rec.eps);
                }
            }
            sweep.write(&path("sweep.csv"))?;
            points.write(&path("checkpoints.csv"))?;
            if let Some(f) = &r.fit_hs {
                println!("H^{} exponent {:.4} (r2 {:.4})", cfg.s, f.slope, f.r2);
            }
            write_json(&path("report.json"), &r)?;
            r.flags
        }
        Command::Residual => {
            let r = run_residual_sweep(&cfg)?;
            let c = run_certification(&cfg)?;
            let mut csv = Csv::new(&["eps", "n", "residual", "gap", "psi_check", "band_e0", "band_e1", "band_e1_minus", "band_e2"]);
            for rec in &r.records {
                let b = &rec.bands_t0;
                csv.row(&[rec.eps, rec.n as f64, rec.residual, rec.gap, rec.psi_check, b.e0, b.e1, b.e1_minus, b.e2]);
            }
            csv.write(&path("residual.csv"))?;
            let mut nu = Csv::new(&["eps", "nu2_fitted", "nu2_closed_form"]);
            for &(eps, v) in &c.nu2_fitted {
                nu.row(&[eps, v, c.nu2_closed_form]);
            }
            nu.write(&path("nu2.csv"))?;
            println!(
                "residual exponent {:.4}, gap exponent {:.4} (full hierarchy {})",
                r.fit_residual.slope, r.fit_gap.slope, r.full_hierarchy_exponent
            );
            for o in &c.oracles {
                println!("{}: {:.3} vs {:.3} with {}", o.band, o.certified.slope, o.modified.slope, o.modification);
            }
            write_json(&path("report.json"), &serde_json::json!({ "residual": r, "certification": c }))?;
            r.flags.into_iter().chain(c.flags).collect()
        }
        Command::EnergyCheck { spacing } => {
            let eps = cfg.eps_list.first().copied().context("empty eps list")?;
            let tr = run_energy_trace(&cfg, eps, spacing)?;
            let mut csv = Csv::new(&["t", "energy", "energy_modified", "d_energy_modified_dt", "ratio"]);
            for s in &tr.samples {
                csv.row(&[s.t, s.e, s.e_modified, s.de_dt, s.ratio]);
            }
            csv.write(&path("energy_trace.csv"))?;
            println!("sup |E~ - E| / eps^2 = {:e}, sup |ratio| = {:e}", tr.gap_constant, tr.sup_abs_ratio);
            let flags = energy_flags(&tr);
            write_json(&path("report.json"), &serde_json::json!({ "trace": tr, "flags": flags }))?;
            flags
        }
        Command::Identities => {
            let r = run_identity_suite(&cfg)?;
            println!("splitting constant {:e}", r.splitting_constant);
            write_json(&path("report.json"), &r)?;
            r.flags
        }
        Command::Nonresonance => {
            let r = run_nonresonance_scan(&cfg)?;
            let mut scans = Csv::new(&["k1", "k_max", "scanned_min", "tail_infimum", "constant"]);
            for s in &r.scans {
                scans.row(&[s.k1, s.k_max, s.scanned_min, s.tail_infimum, s.constant]);
            }
            scans.write(&path("nonresonance.csv"))?;
            let mut gaps = Csv::new(&["m", "gap"]);
            for &(m, g) in &r.harmonic_gaps {
                gaps.row(&[m as f64, g]);
            }
            gaps.write(&path("harmonics.csv"))?;
            write_json(&path("report.json"), &r)?;
            r.flags
        }
        Command::Coeffs => {
            let c = cfg.coefficients()?;
            println!("{}", serde_json::to_string_pretty(&c)?);
            println!("nu2 closed form {}", nu2_closed_form(cfg.k0));
            write_json(&path("report.json"), &c)?;
            Vec::new()
        }
    };
    Ok(print_flags(&flags))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
