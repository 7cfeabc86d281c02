use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use multislip_harness::{run, Cache, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "multislip", version, about = "Experiments on regularized dislocation interaction energies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discrete energies along an n ladder against the continuum limit.
    Convergence(Common),
    /// The same ladder under several regularization families.
    RegCompare(Common),
    /// Self-energy γ_n along δ_n schedules.
    GammaRegime(Common),
    /// Certificate batteries; exits non-zero if any check fails.
    KernelVerify(Common),
    /// Grid relaxation of a net Burgers density.
    RelaxDemo(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Tolerance of the closed-form identity checks.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn load(kind: ExperimentKind, c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let cfg = ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", p.display()))?;
            if cfg.kind != kind {
                bail!("{} describes a {} experiment, not {}", p.display(), cfg.kind.id(), kind.id());
            }
            cfg
        }
        None => ExperimentConfig::new(kind),
    };
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(t) = c.tolerance {
        cfg.tolerance = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::Convergence(c) => (ExperimentKind::Convergence, c),
        Command::RegCompare(c) => (ExperimentKind::RegCompare, c),
        Command::GammaRegime(c) => (ExperimentKind::GammaRegime, c),
        Command::KernelVerify(c) => (ExperimentKind::KernelVerify, c),
        Command::RelaxDemo(c) => (ExperimentKind::RelaxDemo, c),
    };
    if let Some(k) = common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("configuring the thread pool")?;
    }
    let cfg = load(kind, common)?;
    let outcome = run(&cfg, &Cache::from_env()).with_context(|| format!("{} failed", kind.id()))?;
    println!("{}", outcome.summary);
    println!("outputs in {}", outcome.out_dir.display());
    Ok(if outcome.ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
