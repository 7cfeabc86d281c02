use std::fs;
use std::path::Path;

use multislip_harness::config::KappaConfig;
use multislip_harness::output::{from_csv, ResultRow};
use multislip_harness::{run, Cache, ExperimentConfig, ExperimentKind, HarnessError};

fn small_ladder(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Convergence);
    cfg.n_ladder = vec![16, 64];
    cfg.density.h = 1.0 / 16.0;
    cfg.grid.reference_h = 1.0 / 16.0;
    cfg.out = out.to_path_buf();
    cfg
}

#[test]
fn convergence_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_ladder(dir.path());
    let outcome = run(&cfg, &Cache::disabled()).unwrap();
    assert!(outcome.ok);
    for f in ["config.json", "results.csv", "timings.csv", "plot.csv", "report.json"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let rows: Vec<ResultRow> = from_csv(&fs::read_to_string(dir.path().join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![16, 64]);
    assert!(rows.iter().all(|r| r.f >= 0.0 && (r.total - r.g - r.f).abs() < 1e-9 * r.total.abs().max(1.0)));
}

#[test]
fn reruns_are_bit_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&small_ladder(a.path()), &Cache::disabled()).unwrap();
    let cache = tempfile::tempdir().unwrap();
    // Second run goes through the cache, which must not change any bytes.
    run(&small_ladder(b.path()), &Cache::at(cache.path())).unwrap();
    for f in ["results.csv", "plot.csv", "report.json"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert_eq!(String::from_utf8(x).unwrap(), String::from_utf8(y).unwrap(), "{f} differs");
    }
}

#[test]
fn rows_carry_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_ladder(dir.path());
    run(&cfg, &Cache::disabled()).unwrap();
    let snapshot: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(snapshot["config_hash"], cfg.hash());
    let stored: ExperimentConfig = serde_json::from_value(snapshot["config"].clone()).unwrap();
    assert_eq!(stored.hash(), cfg.hash());
    let rows: Vec<ResultRow> = from_csv(&fs::read_to_string(dir.path().join("results.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.config_hash == cfg.hash()));

    let mut other = cfg.clone();
    other.seed = 7;
    assert_ne!(other.hash(), cfg.hash());
}

#[test]
fn ladder_of_length_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_ladder(dir.path());
    cfg.n_ladder = vec![32];
    let outcome = run(&cfg, &Cache::disabled()).unwrap();
    assert!(outcome.ok);
    let rows: Vec<ResultRow> = from_csv(&fs::read_to_string(dir.path().join("results.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].rel_error.is_finite());
}

#[test]
fn underflowing_schedule_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_ladder(dir.path());
    cfg.schedule = multislip::regularize::DeltaSchedule::Exponential { c: 1.0, alpha: 1.0 };
    cfg.n_ladder = vec![64, 1024];
    assert!(matches!(run(&cfg, &Cache::disabled()), Err(HarnessError::Config(_))));
}

#[test]
fn exponential_schedule_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_ladder(dir.path());
    cfg.schedule = multislip::regularize::DeltaSchedule::Exponential { c: 1.0, alpha: 1.0 };
    run(&cfg, &Cache::disabled()).unwrap();
    let rows: Vec<ResultRow> = from_csv(&fs::read_to_string(dir.path().join("results.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.flags.contains("outside_regime")));
}

#[test]
fn gamma_regime_reports_both_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::GammaRegime);
    cfg.regime.log10_range = (2.0, 3.0);
    cfg.out = dir.path().to_path_buf();
    let outcome = run(&cfg, &Cache::disabled()).unwrap();
    assert!(outcome.summary.contains("power") && outcome.summary.contains("exponential"));
    assert!(dir.path().join("results.csv").is_file());
}

#[test]
fn infeasible_relaxation_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::RelaxDemo);
    cfg.relax.kappa = KappaConfig::Gaussian { direction: [1.0, 0.0], magnitude: 2.0, sigma: 0.2 };
    cfg.relax.h = 0.125;
    cfg.out = dir.path().to_path_buf();
    let err = run(&cfg, &Cache::disabled()).unwrap_err();
    assert!(matches!(err, HarnessError::Core(multislip::Error::Infeasible(_))), "{err}");
}

#[test]
fn relax_demo_beats_the_ansatz() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::RelaxDemo);
    cfg.relax.h = 0.125;
    cfg.out = dir.path().to_path_buf();
    let outcome = run(&cfg, &Cache::disabled()).unwrap();
    assert!(outcome.ok, "{}", outcome.summary);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["residual"].as_f64().unwrap() <= 1e-10);
    assert!(report["value"].as_f64().unwrap() <= report["ansatz_value"].as_f64().unwrap());
    assert!(fs::read_to_string(dir.path().join("trace.csv")).unwrap().starts_with("iteration,objective,residual"));
}
