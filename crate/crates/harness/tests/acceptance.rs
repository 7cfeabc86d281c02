//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use multislip::energy::{
    continuum_energy, energy_direct, energy_split, fourier_psd_check, relaxed_energy, ContinuumGrid, RelaxOptions,
    SplitGrid,
};
use multislip::kernels::{KernelFamily, LameParameters};
use multislip::measures::{
    discretize_with_info, min_separation, net_burgers_grid, BoundingBox, Configuration, GridDensity,
    NetBurgersField, SpeciesSet,
};
use multislip::regularize::{FromBelowVariant, RegularizedKernel, RegularizerSpec};
use multislip::Vec2d;
use multislip_harness::ladder::run_ladder;
use multislip_harness::regime::{log_ladder, run_gamma_regime};
use multislip_harness::verify::{
    decomposition_residual, identity_battery, mollified_log_exactness, riesz_scaling, v_reg_oscillation,
    ElasticFields,
};
use multislip_harness::{Cache, ExperimentConfig, ExperimentKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;

fn lame() -> LameParameters<f64> {
    LameParameters::new(1.0, 1.0).unwrap()
}

fn c1_identities() -> Outcome {
    let t = Instant::now();
    let checks = identity_battery(&ElasticFields::closed_form(), &lame(), 1e-8);
    let secs = t.elapsed().as_secs_f64();
    let worst = checks.iter().map(|c| c.value).fold(0.0, f64::max);
    let failed: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    let ok = failed.is_empty() && secs < 30.0;
    Ok((ok, format!("{} identities, worst {worst:.2e} (tol 1e-8), {secs:.2} s (limit 30 s), failed {failed:?}", checks.len())))
}

fn c2_decomposition() -> Outcome {
    let edge = KernelFamily::edge(lame(), &[0.0, PI / 3.0])?;
    let riesz = KernelFamily::riesz(1.0)?;
    let (er, _) = decomposition_residual(&edge, 1e-8)?;
    let (rr, _) = decomposition_residual(&riesz, 1e-9)?;
    let (eo, _) = v_reg_oscillation(&edge, 1e-3);
    let (ro, _) = v_reg_oscillation(&riesz, 1e-3);
    let ok = er <= 1e-4 && rr <= 1e-4 && eo <= 1e-3 && ro <= 1e-3;
    Ok((
        ok,
        format!("residual edge {er:.2e}, riesz {rr:.2e} (tol 1e-4); oscillation edge {eo:.2e}, riesz {ro:.2e} (tol 1e-3)"),
    ))
}

fn random_config(rng: &mut ChaCha8Rng, species: &SpeciesSet) -> Result<Configuration, multislip::Error> {
    let n = rng.gen_range(2..=64);
    let atoms: Vec<(usize, Vec2d)> = (0..n)
        .map(|_| (rng.gen_range(0..species.len()), Vec2d::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    Configuration::from_atoms(species.clone(), &atoms)
}

fn c3_split_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let edge = KernelFamily::edge(lame(), &[0.0, PI / 3.0, PI])?;
    let riesz = KernelFamily::riesz(1.0)?;
    let log = KernelFamily::log(&[1.0, -1.0])?;
    let edge_species = SpeciesSet::from_angles(&[0.0, PI / 3.0, PI])?;
    let two = SpeciesSet::from_angles(&[0.0, PI])?;
    let deltas = [0.08, 0.2, 0.45];
    let mut kernels: Vec<(RegularizedKernel, SpeciesSet)> = Vec::new();
    for &d in &deltas {
        kernels.push((RegularizerSpec::mollified().build(&edge, d)?, edge_species.clone()));
        kernels.push((RegularizerSpec::mollified().build(&riesz, d)?, two.clone()));
        kernels.push((RegularizerSpec::core_cutoff().build(&edge, d)?, edge_species.clone()));
        kernels.push((RegularizerSpec::core_cutoff().build(&log, d)?, two.clone()));
        kernels.push((RegularizerSpec::from_below(FromBelowVariant::Shifted).build(&riesz, d)?, two.clone()));
        kernels.push((RegularizerSpec::from_below(FromBelowVariant::AffineCap).build(&riesz, d)?, two.clone()));
    }
    let mut worst_rel = 0.0f64;
    let mut min_f = f64::INFINITY;
    let mut rasterized = 0;
    for k in 0..200 {
        let (reg, species) = &kernels[rng.gen_range(0..kernels.len())];
        let config = random_config(&mut rng, species)?;
        let grid = if k % 25 == 0 {
            rasterized += 1;
            SplitGrid::default()
        } else {
            SplitGrid::pairwise_only()
        };
        let direct = energy_direct(&config, reg)?;
        let split = energy_split(&config, reg, &grid)?;
        worst_rel = worst_rel.max((split.total - direct.total).abs() / direct.total.abs());
        min_f = min_f.min(split.f_pairwise);
        if let Some(fg) = split.f_grid {
            min_f = min_f.min(fg);
        }
    }
    let ok = worst_rel <= 1e-8 && min_f >= -1e-10;
    Ok((
        ok,
        format!("200 configurations ({rasterized} rasterized): worst relative gap {worst_rel:.2e} (tol 1e-8), min F {min_f:.3e}"),
    ))
}

fn c4_mollified_log() -> Outcome {
    let (w, _) = mollified_log_exactness()?;
    Ok((w <= 1e-12, format!("max |V_delta + log|x|| = {w:.2e} (tol 1e-12)")))
}

fn c5_riesz_scaling() -> Outcome {
    let (w, _) = riesz_scaling(1.0, 1e-9)?;
    Ok((w <= 1e-6, format!("worst deviation {w:.2e} over 10x10x5 samples (tol 1e-6)")))
}

fn c6_convergence() -> Outcome {
    let t = Instant::now();
    let cfg = ExperimentConfig::new(ExperimentKind::Convergence);
    let rep = run_ladder(&cfg, &Cache::disabled())?;
    let secs = t.elapsed().as_secs_f64();
    let err = rep.final_error(0);
    let ok = err <= 0.05 && rep.non_increasing[0] && secs < 600.0;
    Ok((
        ok,
        format!(
            "relative errors {:?}, final {err:.3e} (limit 5%), non-increasing within jitter: {}, {secs:.1} s (limit 600 s)",
            rep.rel_errors[0].iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            rep.non_increasing[0]
        ),
    ))
}

fn c7_reg_compare() -> Outcome {
    let cfg = ExperimentConfig::new(ExperimentKind::RegCompare);
    let rep = run_ladder(&cfg, &Cache::disabled())?;
    let c = rep.comparison().ok_or("no comparison for a single family")?;
    let ok = c.final_spread <= 2.0 * c.final_error;
    Ok((
        ok,
        format!(
            "final spread {:.3e} vs 2 x final discretization error {:.3e} (per family {:?})",
            c.final_spread,
            2.0 * c.final_error,
            c.family_errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    ))
}

fn c8_gamma_regimes() -> Outcome {
    let cfg = ExperimentConfig::new(ExperimentKind::GammaRegime);
    let rep = run_gamma_regime(&cfg)?;
    let (lo, hi) = cfg.regime.log10_range;
    let sampled = log_ladder(lo, hi, cfg.regime.per_decade).len();
    let power = &rep.schedules[0];
    let exp = &rep.schedules[1];
    let slope_ok = (power.slope + 1.0).abs() <= 0.05;
    let exp_ok = exp.min_gamma >= 0.5 && exp.outside.len() == sampled;
    Ok((
        slope_ok && exp_ok,
        format!(
            "n^-1/2 slope {:.4} (target -1 +- 0.05); exp(-n) min gamma {:.3} (bound 0.5), flagged {}/{sampled}",
            power.slope,
            exp.min_gamma,
            exp.outside.len()
        ),
    ))
}

fn random_density(rng: &mut ChaCha8Rng, species: usize) -> Result<GridDensity, multislip::Error> {
    let h = rng.gen_range(0.04..0.2);
    let (cx, cy) = (rng.gen_range(6..30), rng.gen_range(6..30));
    let half = 0.5 * h * cx as f64;
    let centres: Vec<(Vec2d, f64, f64)> = (0..species * 2)
        .map(|_| {
            (
                Vec2d::new(rng.gen_range(-half..half), rng.gen_range(-half..half)),
                rng.gen_range(0.1..0.6),
                rng.gen_range(0.2..1.0),
            )
        })
        .collect();
    let bbox = BoundingBox::new(-half, -half, half, -half + h * cy as f64);
    GridDensity::from_fn(bbox, h, species, |s, x| {
        centres[2 * s..2 * s + 2]
            .iter()
            .map(|&(c, w, a)| a * (-(x - c).norm_sq() / (2.0 * w * w)).exp())
            .sum()
    })
}

fn c9_discretizer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    let mut worst_mass = 0.0f64;
    for k in 0..100 {
        let sn = rng.gen_range(1..=3);
        let mu = random_density(&mut rng, sn)?;
        let species = SpeciesSet::from_angles(&(0..sn).map(|s| s as f64 * TAU / 3.0).collect::<Vec<_>>())?;
        let n = (16.0 * 256f64.powf(rng.gen::<f64>())).round() as usize;
        let (c, info) = discretize_with_info(&mu, &species, n)?;
        let sep = if c.n() > 1 { min_separation(&c)? } else { f64::INFINITY };
        let counts = c.species_counts();
        let mass_gap = (0..sn)
            .map(|s| (counts[s] as f64 / n as f64 - mu.species_mass(s) / mu.total_mass()).abs() * n as f64)
            .fold(0.0, f64::max);
        worst_mass = worst_mass.max(mass_gap / sn as f64);
        let bx = mu.bbox().inflate(1.0 / mu.sup_norm());
        let confined = c.atoms().iter().all(|&(_, p)| bx.contains(p));
        if !(sep >= info.r_n) || mass_gap > sn as f64 || !confined || c.n() != n {
            failures.push(k);
        }
    }
    Ok((
        failures.is_empty(),
        format!("100 densities, worst n|n_s/n - mass_s|/S = {worst_mass:.3} (limit 1), failing cases {failures:?}"),
    ))
}

fn c10_relaxation() -> Outcome {
    // Single species: the decomposition is forced.
    let log = KernelFamily::log(&[1.0])?;
    let one = SpeciesSet::from_angles(&[0.0])?;
    let mu = GridDensity::truncated_gaussian(BoundingBox::square(0.5), 0.125, 0.3)?;
    let kappa = net_burgers_grid(&mu, &one)?;
    let r1 = relaxed_energy(&kappa, &one, &log, &RelaxOptions::default())?;
    let forced = continuum_energy(&mu, &log, ContinuumGrid::default())?.total;
    let gap1 = (r1.value - forced).abs();

    // Antipodal pair with κ ≡ 0: supported on the origin cell only.
    let edge = KernelFamily::edge(lame(), &[0.0, PI])?;
    let pair = SpeciesSet::from_angles(&[0.0, PI])?;
    let (h, cells) = (0.125, 4);
    let bbox = BoundingBox::square(0.25);
    let zero = NetBurgersField::Grid { bbox, h, nx: cells, ny: cells, values: vec![Vec2d::zero(); cells * cells] };
    let r2 = relaxed_energy(&zero, &pair, &edge, &RelaxOptions::default())?;
    let origin = 2 * cells + 2;
    let mut cell = vec![0.0; cells * cells];
    cell[origin] = 0.5 / (h * h);
    let ansatz = continuum_energy(&GridDensity::new(bbox, h, vec![cell.clone(), cell])?, &edge, ContinuumGrid::default())?;
    let ok = gap1 <= 1e-10 && r2.value <= ansatz.total + 1e-10 && r2.residual <= 1e-10;
    Ok((
        ok,
        format!(
            "S=1 gap {gap1:.2e} (tol 1e-10); antipodal value {:.3e} vs ansatz {:.3e}, residual {:.2e} (tol 1e-10)",
            r2.value, ansatz.total, r2.residual
        ),
    ))
}

fn c11_fourier() -> Outcome {
    let omegas: Vec<Vec2d> = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .flat_map(|&m| [0.0, 1.1].iter().map(move |&a| Vec2d::unit(a).scale(m)))
        .collect();
    let riesz = fourier_psd_check(&KernelFamily::riesz(1.0)?, &omegas, None)?;
    let edge = fourier_psd_check(&KernelFamily::edge(lame(), &[0.0])?, &omegas, None)?;
    let (r, e) = (riesz.gram_min_eigenvalue(), edge.gram_min_eigenvalue());
    Ok((
        r >= -1e-8 && e >= -1e-8,
        format!(
            "{} frequencies: riesz Gram min eigenvalue {r:.3e}, edge min sum |W_k|^2 {e:.3e} (bound -1e-8); \
             transformed V - V_reg min eigenvalue riesz {:.3e}, edge {:.3e}, Gram residual riesz {:.2e}, edge {:.2e}",
            omegas.len(),
            riesz.min_eigenvalue(),
            edge.min_eigenvalue(),
            riesz.max_gram_residual(),
            edge.max_gram_residual()
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("closed-form identity battery", c1_identities),
        ("decomposition residuals", c2_decomposition),
        ("split identity", c3_split_identity),
        ("mollified log exactness", c4_mollified_log),
        ("riesz scaling law", c5_riesz_scaling),
        ("gamma-limit surrogate", c6_convergence),
        ("regularizer independence", c7_reg_compare),
        ("gamma_n regimes", c8_gamma_regimes),
        ("discretizer contract", c9_discretizer),
        ("relaxation sandwich", c10_relaxation),
        ("fourier diagnostic", c11_fourier),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
