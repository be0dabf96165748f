use std::path::Path;
use std::process::{Command, Output};

fn nlskg(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlskg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn nlskg")
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

#[test]
fn coeffs_prints_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlskg(dir.path(), &["coeffs"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("nu2 closed form"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report.is_object());
}

#[test]
fn synthetic_validate_writes_csvs_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlskg(dir.path(), &["validate", "--synthetic", "--eps", "0.2,0.1,0.05"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("PASS ")), "{text}");
    assert!(!text.lines().any(|l| l.starts_with("FAIL ")), "{text}");
    assert_eq!(header(&dir.path().join("sweep.csv")), "eps,n,dt,sup_hs_error,sup_linf_error,hamiltonian_drift,runtime_s");
    assert_eq!(
        header(&dir.path().join("checkpoints.csv")),
        "eps,t,hs_error,linf_error,hs_error_order2,energy,energy_modified"
    );
    let rows = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap().lines().count();
    assert_eq!(rows, 4);
}

#[test]
fn unknown_config_keys_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"epsilon": [0.1]}"#).unwrap();
    let out = nlskg(dir.path(), &["coeffs", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));
}

#[test]
fn bad_eps_list_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nlskg(dir.path(), &["validate", "--synthetic", "--eps", "0.1,0.1"]);
    assert_eq!(out.status.code(), Some(2));
}
