use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use symmetrix::bayes::{run_protocol, PomPolicy, ProtocolSettings};
use symmetrix::blend::{AzimuthConvention, BlendFamily};
use symmetrix::personick::{build_moments, solve_optimal, PersonickSolution, Pom, StateFamily};
use symmetrix::{figure1_sweep, BlochDirection, Figure1Config, PriorDensity, QuadratureRule, Tolerances};

use crate::config::{Convention, PolicyKind, PriorConfig, RunConfig};
use crate::model::{build_fmap, build_prior, complex_rows, Model};

/// Everything a command needs after flags have been applied.
pub struct RunContext {
    pub config: RunConfig,
    pub rule: QuadratureRule,
    pub tol: Tolerances,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Reals in CSV carry 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional_real(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), real)
}

#[derive(Debug, Serialize)]
pub struct PomEntry {
    pub label: f64,
    pub estimate: f64,
    pub rank: usize,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub model: &'static str,
    pub s_matrix: Vec<Vec<[f64; 2]>>,
    pub eigenvalues: Vec<f64>,
    pub pom: Vec<PomEntry>,
    pub estimates: Vec<f64>,
    pub prior_error: f64,
    pub gain: f64,
    pub min_error: f64,
    pub gain_ratio: f64,
    pub kernel_entries: usize,
}

fn solve_with<F>(ctx: &RunContext, family: &F, controls: &F::Controls, prior: &PriorDensity) -> Result<PersonickSolution>
where
    F: StateFamily + Clone + 'static,
    F::Controls: 'static,
{
    let fmap = build_fmap(&ctx.config.fmap, family, controls, &ctx.tol)?;
    let moments = build_moments(family, controls, prior, &fmap, &ctx.rule, &ctx.tol).context("building moments")?;
    solve_optimal(&moments, &fmap, &ctx.tol).context("solving for the optimal strategy")
}

pub fn solve(ctx: &RunContext, out: &mut dyn Write) -> Result<()> {
    let model = Model::from_config(&ctx.config.model, &ctx.tol)?;
    let prior = build_prior(&ctx.config.prior, &ctx.rule, &ctx.tol)?;
    let solution = match &model {
        Model::Blend(dir) => solve_with(ctx, &BlendFamily, dir, &prior)?,
        Model::Table(table) => solve_with(ctx, table, &(), &prior)?,
    };
    let ranks = solution.pom.ranks();
    let pom = solution
        .pom
        .projectors
        .iter()
        .enumerate()
        .map(|(k, p)| PomEntry {
            label: solution.pom.labels[k],
            estimate: solution.estimates[k],
            rank: ranks[k],
            matrix: complex_rows(p.matrix()),
        })
        .collect();
    let report = SolveReport {
        model: model.name(),
        s_matrix: complex_rows(solution.s.matrix()),
        eigenvalues: solution.eigen.values.clone(),
        pom,
        estimates: solution.estimates.clone(),
        prior_error: solution.prior_error,
        gain: solution.gain,
        min_error: solution.min_error,
        gain_ratio: solution.gain_ratio(),
        kernel_entries: solution.kernel_entries,
    };
    serde_json::to_writer_pretty(&mut *out, &report)?;
    writeln!(out)?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 7] = ["a", "alpha", "beta", "prior_error", "gain", "min_error", "gain_ratio"];

pub fn sweep(ctx: &RunContext, out: &mut dyn Write) -> Result<()> {
    let (alpha0, beta0) = match &ctx.config.model {
        crate::config::ModelConfig::Blend { alpha, beta } => (*alpha, *beta),
        _ => bail!("sweep varies the blend model's (a, alpha, beta); set model.kind = \"blend\""),
    };
    let a_grid = match (&ctx.config.sweep.a, &ctx.config.prior) {
        (Some(grid), PriorConfig::Haldane { .. }) => grid.values("sweep.a")?,
        (None, PriorConfig::Haldane { a }) => vec![*a],
        _ => bail!("sweep varies the Haldane cutoff a; set prior.kind = \"haldane\""),
    };
    let alpha_grid = ctx.config.sweep.alpha.as_ref().map_or(Ok(vec![alpha0]), |g| g.values("sweep.alpha"))?;
    let beta_grid = ctx.config.sweep.beta.as_ref().map_or(Ok(vec![beta0]), |g| g.values("sweep.beta"))?;

    let mut cells = Vec::with_capacity(a_grid.len() * alpha_grid.len() * beta_grid.len());
    for &a in &a_grid {
        for &alpha in &alpha_grid {
            for &beta in &beta_grid {
                cells.push((a, alpha, beta));
            }
        }
    }
    let results: Vec<Result<PersonickSolution>> = cells
        .par_iter()
        .map(|&(a, alpha, beta)| {
            let dir = BlochDirection::new(alpha, beta)?;
            let prior = PriorDensity::haldane(a)?;
            solve_with(ctx, &BlendFamily, &dir, &prior)
        })
        .collect();

    let any_failed = results.iter().any(|r| r.is_err());
    let mut writer = csv::WriterBuilder::new().flexible(false).from_writer(out);
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    if any_failed {
        header.push("error");
    }
    writer.write_record(&header)?;
    for (&(a, alpha, beta), result) in cells.iter().zip(&results) {
        let mut row = vec![real(a), real(alpha), real(beta)];
        match result {
            Ok(s) => row.extend([s.prior_error, s.gain, s.min_error, s.gain_ratio()].map(real)),
            Err(e) => {
                row.extend(["NA", "NA", "NA", "NA"].map(String::from));
                eprintln!("sweep cell a={a}, alpha={alpha}, beta={beta} failed: {e:#}");
            }
        }
        if any_failed {
            row.push(result.as_ref().err().map(|e| format!("{e:#}")).unwrap_or_default());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub const FIGURE1_HEADER: [&str; 5] = ["alpha", "eta0", "mhe", "prior_error", "min_error"];

pub fn figure1(ctx: &RunContext, out: &mut dyn Write) -> Result<()> {
    let section = &ctx.config.figure1;
    let defaults = Figure1Config::default();
    let config = Figure1Config {
        a: section.a.unwrap_or(defaults.a),
        beta: section.beta.unwrap_or(defaults.beta),
        alphas: section.alpha.as_ref().map_or(Ok(vec![0.0, FRAC_PI_4, FRAC_PI_2]), |g| g.values("figure1.alpha"))?,
        eta0s: section.eta0.as_ref().map_or(Ok(defaults.eta0s), |g| g.values("figure1.eta0"))?,
        convention: match section.convention {
            None | Some(Convention::Conjugate) => AzimuthConvention::Conjugate,
            Some(Convention::Covariant) => AzimuthConvention::Covariant,
        },
    };
    let rows = figure1_sweep(&config, &ctx.rule, &ctx.tol).context("figure1 sweep")?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(FIGURE1_HEADER)?;
    for r in &rows {
        if r.mhe.is_none() {
            eprintln!("figure1 cell alpha={}, eta0={}: local measurement unavailable", r.alpha, r.eta0);
        }
        writer.write_record([real(r.alpha), real(r.eta0), optional_real(r.mhe), real(r.prior_error), real(r.min_error)])?;
    }
    writer.flush()?;
    Ok(())
}

pub const SIMULATE_HEADER: [&str; 4] = ["shot", "outcome", "posterior_var_f", "estimate"];

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub estimate: f64,
    pub credible_interval: [f64; 2],
    pub credible_level: f64,
    pub posterior_var_f: f64,
    pub shots: usize,
    pub seed: u64,
    pub theta_true: f64,
}

fn simulate_with<F>(
    ctx: &RunContext,
    family: &F,
    policy: PomPolicy<F::Controls>,
    control: &F::Controls,
    settings: ProtocolSettings<'_>,
) -> Result<symmetrix::ProtocolRun>
where
    F: StateFamily + Clone + 'static,
    F::Controls: 'static,
{
    let prior = build_prior(&ctx.config.prior, &ctx.rule, &ctx.tol)?;
    let fmap = build_fmap(&ctx.config.fmap, family, control, &ctx.tol)?;
    run_protocol(family, &prior, &fmap, &policy, settings).context("running the protocol")
}

pub fn simulate(ctx: &RunContext, out: &mut dyn Write) -> Result<()> {
    let sim = &ctx.config.simulate;
    let seed = ctx.seed.or(sim.seed).context("simulate needs a seed: pass --seed or set simulate.seed")?;
    let theta_true = sim.theta_true.context("simulate.theta_true is required")?;
    if sim.shots == 0 {
        bail!("simulate.shots must be at least 1");
    }
    if !(sim.credible_level > 0.0 && sim.credible_level < 1.0) {
        bail!("simulate.credible_level must lie in (0, 1)");
    }
    let settings = ProtocolSettings { shots: sim.shots, theta_true, seed, rule: &ctx.rule, tol: &ctx.tol };
    let model = Model::from_config(&ctx.config.model, &ctx.tol)?;
    let run = match &model {
        Model::Blend(dir) => {
            let policy = match sim.policy {
                PolicyKind::Optimal => PomPolicy::OptimalForPrior { control: *dir },
                PolicyKind::Computational => PomPolicy::Fixed { control: *dir, pom: Pom::computational_basis(2) },
                PolicyKind::Adaptive => {
                    if sim.candidates.is_empty() {
                        bail!("simulate.candidates must list at least one {{ alpha, beta }} for the adaptive policy");
                    }
                    let candidates = sim
                        .candidates
                        .iter()
                        .map(|c| BlochDirection::new(c.alpha, c.beta))
                        .collect::<symmetrix::Result<Vec<_>>>()
                        .context("simulate.candidates")?;
                    PomPolicy::Adaptive { candidates }
                }
            };
            simulate_with(ctx, &BlendFamily, policy, dir, settings)?
        }
        Model::Table(table) => {
            let policy = match sim.policy {
                PolicyKind::Optimal => PomPolicy::OptimalForPrior { control: () },
                PolicyKind::Computational => {
                    PomPolicy::Fixed { control: (), pom: Pom::computational_basis(table.dim()) }
                }
                PolicyKind::Adaptive => bail!("the adaptive policy needs the blend model's Bloch-direction controls"),
            };
            simulate_with(ctx, table, policy, &(), settings)?
        }
    };

    let mut writer = csv::Writer::from_writer(&mut *out);
    writer.write_record(SIMULATE_HEADER)?;
    for shot in &run.trace {
        writer.write_record([shot.shot.to_string(), real(shot.label), real(shot.posterior_var_f), real(shot.estimate)])?;
    }
    writer.flush()?;
    drop(writer);

    let (lo, hi) = run.grid.credible_interval(sim.credible_level)?;
    let summary = SimulationSummary {
        estimate: run.estimate,
        credible_interval: [lo, hi],
        credible_level: sim.credible_level,
        posterior_var_f: run.grid.posterior_var_f(),
        shots: sim.shots,
        seed,
        theta_true,
    };
    let json = serde_json::to_string_pretty(&summary)?;
    match summary_path(ctx) {
        Some(path) => std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => eprintln!("{json}"),
    }
    Ok(())
}

/// `simulate.summary`, else `<out stem>.summary.json` beside `--out`.
fn summary_path(ctx: &RunContext) -> Option<PathBuf> {
    if let Some(path) = &ctx.config.simulate.summary {
        return Some(path.clone());
    }
    let out = ctx.out.as_ref()?;
    let stem = out.file_stem()?.to_string_lossy().into_owned();
    Some(out.with_file_name(format!("{stem}.summary.json")))
}
