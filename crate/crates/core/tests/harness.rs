use nlskg::harness::random::trial_rng;
use nlskg::harness::{
    fit_power_law, run_certification, run_identity_suite, run_residual_sweep, run_validation_with, ExperimentConfig,
    IdentityReport, ResidualReport, SolverMode, SweepReport,
};
use nlskg::Error;
use proptest::prelude::*;
use rand::Rng;

const EPS: [f64; 5] = [0.2, 0.141, 0.1, 0.071, 0.05];

proptest! {
    #[test]
    fn exact_power_laws_are_recovered(slope in -3.0f64..5.0, prefactor in 1e-3f64..1e3) {
        let pts: Vec<_> = EPS.iter().map(|&e| (e, prefactor * e.powf(slope))).collect();
        let fit = fit_power_law(&pts).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-12 * (1.0 + slope.abs()));
        prop_assert!((fit.intercept - prefactor.ln()).abs() <= 1e-10);
        prop_assert!(fit.r2 >= 1.0 - 1e-12);
    }

    #[test]
    fn noisy_power_laws_stay_close(seed in any::<u64>(), slope in 0.5f64..4.5) {
        let mut rng = trial_rng(seed, 0);
        let pts: Vec<_> = EPS
            .iter()
            .map(|&e| (e, 2.0 * e.powf(slope) * (1.0 + 0.01 * rng.random_range(-1.0..1.0))))
            .collect();
        let fit = fit_power_law(&pts).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 0.05, "{} vs {}", fit.slope, slope);
    }
}

#[test]
fn synthetic_sweep_recovers_three_halves() {
    let cfg = ExperimentConfig::default();
    let r = run_validation_with(&cfg, SolverMode::Synthetic, false).unwrap();
    let fit = r.fit_hs.as_ref().unwrap();
    assert!((fit.slope - 1.5).abs() < 1e-12, "{}", fit.slope);
    assert!(r.passed());
    let text = serde_json::to_string(&r).unwrap();
    let back: SweepReport = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

#[test]
fn bad_eps_lists_are_config_errors() {
    let dup = ExperimentConfig { eps_list: vec![0.2, 0.1, 0.1], ..Default::default() };
    assert!(matches!(run_validation_with(&dup, SolverMode::Synthetic, false), Err(Error::Config(_))));
    let empty = ExperimentConfig { eps_list: vec![], ..Default::default() };
    assert!(matches!(run_residual_sweep(&empty), Err(Error::Config(_))));
    assert!(matches!(run_certification(&empty), Err(Error::Config(_))));
    assert!(ExperimentConfig::from_json(r#"{"eps": [0.1]}"#).is_err());
    let cfg = ExperimentConfig::from_json(r#"{"T0": 0.5, "dT_nls": 0.01}"#).unwrap();
    assert_eq!((cfg.t0, cfg.dt_nls, cfg.s), (0.5, 0.01, 6));
}

#[test]
fn residual_report_round_trips() {
    let cfg = ExperimentConfig { eps_list: vec![0.2, 0.141, 0.1], ..Default::default() };
    let r = run_residual_sweep(&cfg).unwrap();
    let text = serde_json::to_string_pretty(&r).unwrap();
    let back: ResidualReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}

#[test]
fn identity_suite_is_deterministic_across_thread_counts() {
    let cfg = ExperimentConfig { trials: 6, ..Default::default() };
    let a = run_identity_suite(&cfg).unwrap();
    let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| run_identity_suite(&cfg).unwrap());
    assert_eq!(a, b);
    let back: IdentityReport = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn seeds_change_samples_not_verdicts() {
    let mut seen = Vec::new();
    for seed in 0..10u64 {
        let cfg = ExperimentConfig { trials: 3, seed, ..Default::default() };
        let r = run_identity_suite(&cfg).unwrap();
        assert!(r.passed(), "seed {seed}: {:?}", r.flags);
        seen.push(r.equivalence.mean_ratio);
    }
    seen.sort_by(f64::total_cmp);
    seen.dedup();
    assert_eq!(seen.len(), 10);
}
