//! Experiment runner for regularized multi-species interaction energies:
//! convergence ladders, regularizer comparisons, γ_n regime sweeps,
//! certificate batteries and relaxation demos.

pub mod cache;
pub mod config;
pub mod error;
pub mod ladder;
pub mod output;
pub mod regime;
pub mod relax_demo;
pub mod verify;

use std::path::PathBuf;

pub use cache::Cache;
pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};

use output::{plot_points, OutputDir, PlotPoint, TimingRow};

/// What a run wrote and whether its checks passed.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ok: bool,
    pub summary: String,
    pub out_dir: PathBuf,
}

fn spread_points(rep: &ladder::LadderReport) -> Vec<PlotPoint> {
    rep.steps
        .iter()
        .zip(&rep.spreads)
        .map(|(st, &v)| PlotPoint { experiment: rep.experiment.clone(), n: st.n, series: "spread".into(), value: v })
        .collect()
}

/// Runs one experiment and writes its outputs below `cfg.out`.
pub fn run(cfg: &ExperimentConfig, cache: &Cache) -> Result<RunOutcome> {
    cfg.validate()?;
    let out = OutputDir::create(&cfg.out)?;
    out.write_config(cfg)?;
    let (ok, summary) = match cfg.kind {
        ExperimentKind::Convergence | ExperimentKind::RegCompare => {
            let rep = ladder::run_ladder(cfg, cache)?;
            out.merge_steps("results.csv", &rep.rows)?;
            out.write_csv("timings.csv", &rep.timings)?;
            let mut plot = plot_points(&rep.all_rows());
            plot.extend(spread_points(&rep));
            out.write_csv("plot.csv", &plot)?;
            out.write_json("report.json", &rep)?;
            let mut lines = vec![format!("reference E = {:.10}", rep.reference)];
            for (k, name) in rep.series.iter().enumerate() {
                lines.push(format!(
                    "{name}: final relative error {:.3e}, non-increasing within jitter: {}",
                    rep.final_error(k),
                    rep.non_increasing[k]
                ));
            }
            if let Some(c) = rep.comparison() {
                lines.push(format!(
                    "final spread {:.3e} vs final discretization error {:.3e}; spread decreasing: {}",
                    c.final_spread, c.final_error, c.spread_decreasing
                ));
            }
            if !rep.outside_regime.is_empty() {
                lines.push(format!("outside regime at n = {:?}", rep.outside_regime));
            }
            (true, lines.join("\n"))
        }
        ExperimentKind::GammaRegime => {
            let rep = regime::run_gamma_regime(cfg)?;
            out.write_csv("results.csv", &rep.rows)?;
            out.write_csv("plot.csv", &regime::regime_plot(&rep.rows))?;
            out.write_json("report.json", &rep)?;
            let lines: Vec<String> = rep
                .schedules
                .iter()
                .map(|s| {
                    format!(
                        "{}: slope {:.4}, gamma in [{:.3e}, {:.3e}], outside regime at {} of the sampled n",
                        s.schedule,
                        s.slope,
                        s.min_gamma,
                        s.max_gamma,
                        s.outside.len()
                    )
                })
                .collect();
            (true, lines.join("\n"))
        }
        ExperimentKind::KernelVerify => {
            let rep = verify::run_kernel_verify(cfg)?;
            out.write_json("report.json", &rep)?;
            let timings: Vec<TimingRow> = rep
                .seconds
                .iter()
                .map(|(name, s)| TimingRow { experiment: "kernel_verify".into(), series: name.clone(), n: 0, seconds: *s })
                .collect();
            out.write_csv("timings.csv", &timings)?;
            let lines: Vec<String> = rep
                .checks
                .iter()
                .map(|c| format!("{} {}: {:.3e} (tolerance {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance))
                .collect();
            (rep.all_pass(), lines.join("\n"))
        }
        ExperimentKind::RelaxDemo => {
            let b = relax_demo::run_relax_demo(cfg)?;
            out.write_text("minimizer.json", &b.result.minimizer.to_json())?;
            out.write_text("trace.csv", &b.result.trace_csv().map_err(HarnessError::Core)?)?;
            if let Some(a) = &b.ansatz {
                out.write_text("ansatz.json", &a.to_json())?;
            }
            out.write_json("report.json", &b.summary)?;
            let s = &b.summary;
            let mut line = format!(
                "relaxed value {:.12} (residual {:.1e}, {} iterations)",
                s.value, s.residual, s.iterations
            );
            if let Some(a) = s.ansatz_value {
                line.push_str(&format!("; ansatz {a:.12}"));
            }
            (s.below_ansatz != Some(false), line)
        }
    };
    Ok(RunOutcome { ok, summary, out_dir: cfg.out.clone() })
}
