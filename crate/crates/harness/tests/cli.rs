use std::process::Command;

fn multislip() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multislip"))
}

#[test]
fn help_lists_subcommands() {
    let out = multislip().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["convergence", "reg-compare", "gamma-regime", "kernel-verify", "relax-demo"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn gamma_regime_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kind":"gamma_regime","regime":{"schedules":[{"rule":"power","c":1.0,"beta":0.5}],"log10_range":[2.0,3.0],"per_decade":2,"threshold":0.1}}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = multislip()
        .args(["gamma-regime", "--threads", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("results.csv").is_file());
    assert!(out_dir.join("config.json").is_file());
}

#[test]
fn mismatched_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kind":"convergence"}"#).unwrap();
    let out = multislip().args(["relax-demo", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("convergence"));
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kind":"convergence","n_ladder":[64,16]}"#).unwrap();
    let out = multislip().args(["convergence", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly increasing"));
}
