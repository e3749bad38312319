use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sglasso_core::eval::{relative_errors, support_metrics, write_metrics_csv};
use sglasso_core::graph::{build_vote_graph, read_parties, read_votes, GraphOptions};
use sglasso_core::io::{write_bundle, write_matrix_csv, BUNDLE_FILES};
use sglasso_core::matrix::spectral_norm;
use sglasso_core::sim::{gen_kron_sum, gen_missing_data};
use sglasso_core::sweep::sweep_path;
use sglasso_core::tuning::{bic_select, cross_validate, CvOptions};
use sglasso_core::{
    cov_inputs, estimators, CovarianceKind, Criterion, Error, EstimateResult, EstimatorSpec,
    EstimatorVariant, MaskedData, MetricsRow, ModelFamily, ModelSpec, Penalty, PenaltyKind, RadiusSpec,
    SymmetricMatrix,
};

use crate::args::{
    Cli, Command, CriterionArg, EstimateArgs, Family, GraphArgs, Noise, PenaltyArg, SimulateArgs, SpecArgs,
    SpectrumArgs, SweepArgs, TuneArgs, Variant,
};
use crate::config::{FileConfig, NoiseSpec, Rates, SimulateConfig};
use crate::inputs::{self, missing_token, Loaded};
use crate::manifest::Recorder;

/// Support threshold used when scoring a single fit against the truth.
const SUPPORT_THRESHOLD: f64 = 1e-4;

pub fn run(cli: Cli) -> Result<()> {
    let cfg = FileConfig::load(cli.global.config.as_deref())?;
    let g = &cli.global;
    if g.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()).into());
    }
    fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
    let mut rec = Recorder::new(command_name(&cli.command), &g.out);
    if let Some(c) = &g.config {
        rec.inputs.push(c.clone());
    }
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, &cfg, g.seed, &mut rec),
        Command::Estimate(a) => estimate(a, &cfg, &mut rec),
        Command::Sweep(a) => sweep(a, &cfg, g.seed, g.jobs, &mut rec),
        Command::Tune(a) => tune(a, &cfg, g.seed, &mut rec),
        Command::Graph(a) => graph(a, &cfg, &mut rec),
        Command::Spectrum(a) => spectrum(a, &cfg, &mut rec),
    };
    let status = if result.is_ok() { "ok" } else { "error" };
    rec.finish(status).context("writing manifest.json")?;
    result
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Estimate(_) => "estimate",
        Command::Sweep(_) => "sweep",
        Command::Tune(_) => "tune",
        Command::Graph(_) => "graph",
        Command::Spectrum(_) => "spectrum",
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn cfg_err(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

fn penalty_kind(p: PenaltyArg) -> PenaltyKind {
    match p {
        PenaltyArg::L1 => PenaltyKind::L1,
        PenaltyArg::Scad => PenaltyKind::Scad,
        PenaltyArg::Mcp => PenaltyKind::Mcp,
    }
}

fn variant(v: Variant) -> EstimatorVariant {
    match v {
        Variant::Nonproj => EstimatorVariant::NonprojGlasso,
        Variant::Proj => EstimatorVariant::ProjGlasso,
        Variant::Nodewise => EstimatorVariant::Nodewise,
    }
}

fn default_a(kind: PenaltyKind) -> f64 {
    match kind {
        PenaltyKind::L1 => 0.0,
        PenaltyKind::Scad => 3.7,
        PenaltyKind::Mcp => 2.5,
    }
}

/// Radius for `variant` at `scale` times the oracle value.
fn scaled_radius(v: EstimatorVariant, scale: f64, theta_star: Option<&SymmetricMatrix>) -> Result<RadiusSpec> {
    if v == EstimatorVariant::Nodewise {
        return Ok(RadiusSpec::PerNode { per_node_scale: scale });
    }
    let t = theta_star.ok_or_else(|| cfg_err("a radius scale needs ground truth (a simulated bundle)"))?;
    Ok(RadiusSpec::Fixed(scale * spectral_norm(t)?))
}

/// Flags over the config's `estimator` section. `lambda_required` is false when
/// the caller supplies a grid.
fn build_spec(
    args: &SpecArgs,
    base: Option<&EstimatorSpec>,
    theta_star: Option<&SymmetricMatrix>,
    lambda_required: bool,
) -> Result<EstimatorSpec> {
    let v = args
        .variant
        .map(variant)
        .or(base.map(|b| b.variant))
        .unwrap_or(EstimatorVariant::NonprojGlasso);
    let kind = args
        .penalty
        .map(penalty_kind)
        .or(base.map(|b| b.penalty.kind()))
        .unwrap_or(PenaltyKind::L1);
    let lambda = match (args.lambda, base.map(|b| b.penalty.lambda())) {
        (Some(l), _) | (None, Some(l)) => l,
        (None, None) if lambda_required => return Err(cfg_err("--lambda is required")),
        (None, None) => 0.1,
    };
    let a = args
        .a
        .or(base.filter(|b| b.penalty.kind() == kind).map(|b| b.penalty.a()))
        .unwrap_or_else(|| default_a(kind));
    let penalize_diagonal = !args.no_penalize_diagonal && base.is_none_or(|b| b.penalty.penalize_diagonal());
    let penalty = Penalty::new(kind, lambda, a)?.with_penalize_diagonal(penalize_diagonal);
    let radius = match (args.radius, args.radius_scale, base) {
        (Some(r), _, _) => RadiusSpec::Fixed(r),
        (None, Some(s), _) => scaled_radius(v, s, theta_star)?,
        (None, None, Some(b)) => b.radius,
        (None, None, None) => return Err(cfg_err("--radius or --radius-scale is required")),
    };
    let mut solver = base.map(|b| b.solver).unwrap_or_default();
    if let Some(r) = args.rho {
        solver.rho = r;
    }
    if let Some(m) = args.max_iter {
        solver.max_iter = m;
    }
    if let Some(t) = args.tol {
        solver.tol = t;
    }
    let mut spec = EstimatorSpec::new(v, penalty, 1.0);
    spec.radius = radius;
    if let Some(b) = base {
        spec.nodewise = b.nodewise;
    }
    let spec = spec.with_solver(solver);
    spec.validate()?;
    Ok(spec)
}

fn simulate_config(a: &SimulateArgs, base: Option<&SimulateConfig>, seed: u64) -> Result<SimulateConfig> {
    let dim = a
        .dim
        .or(base.map(|b| b.model.dim))
        .ok_or_else(|| cfg_err("--dim is required"))?;
    let family = match (a.family, base.map(|b| b.model.family)) {
        (None, Some(f)) => override_family(f, a)?,
        (Some(Family::Ar1), _) => ModelFamily::Ar1 { r: a.r.unwrap_or(0.6) },
        (Some(Family::StarBlock), _) => ModelFamily::StarBlock {
            r: a.r.unwrap_or(0.5),
            block_size: a.block_size.ok_or_else(|| cfg_err("star-block needs --block-size"))?,
        },
        (Some(Family::ErdosRenyi), _) => ModelFamily::ErdosRenyi {
            edges: a.edges.ok_or_else(|| cfg_err("erdos-renyi needs --edges"))?,
        },
        (None, None) => return Err(cfg_err("--family is required")),
    };
    let n = a.n.or(base.map(|b| b.n)).ok_or_else(|| cfg_err("--n is required"))?;
    let noise = match (a.noise, base.map(|b| b.noise.clone())) {
        (Some(Noise::MissingData), _) | (None, Some(NoiseSpec::MissingData { .. })) => {
            let zeta = match (&a.zeta, base.map(|b| &b.noise)) {
                (Some(z), _) => Rates::from_list(z.clone()),
                (None, Some(NoiseSpec::MissingData { zeta })) => zeta.clone(),
                _ => return Err(cfg_err("missing-data noise needs --zeta")),
            };
            NoiseSpec::MissingData { zeta }
        }
        (Some(Noise::KronSum), _) | (None, Some(NoiseSpec::KronSum { .. })) => {
            let (base_tau, base_edges) = match base.map(|b| &b.noise) {
                Some(NoiseSpec::KronSum { tau_b, b_edges }) => (Some(*tau_b), *b_edges),
                _ => (None, None),
            };
            NoiseSpec::KronSum {
                tau_b: a
                    .tau_b
                    .or(base_tau)
                    .ok_or_else(|| cfg_err("kron-sum noise needs --tau-b"))?,
                b_edges: a.b_edges.or(base_edges),
            }
        }
        (None, None) => return Err(cfg_err("--noise is required")),
    };
    Ok(SimulateConfig {
        model: ModelSpec { family, dim, seed },
        noise,
        n,
    })
}

fn override_family(f: ModelFamily, a: &SimulateArgs) -> Result<ModelFamily> {
    Ok(match f {
        ModelFamily::Ar1 { r } => ModelFamily::Ar1 { r: a.r.unwrap_or(r) },
        ModelFamily::StarBlock { r, block_size } => ModelFamily::StarBlock {
            r: a.r.unwrap_or(r),
            block_size: a.block_size.unwrap_or(block_size),
        },
        ModelFamily::ErdosRenyi { edges } => ModelFamily::ErdosRenyi {
            edges: a.edges.unwrap_or(edges),
        },
    })
}

/// Draws one dataset; returns it with the row-covariance model for Kronecker-sum noise.
fn generate(sc: &SimulateConfig, seed: u64) -> Result<(sglasso_core::GeneratedDataset, Option<ModelSpec>)> {
    let model = ModelSpec { seed, ..sc.model }.build()?;
    match &sc.noise {
        NoiseSpec::MissingData { zeta } => Ok((gen_missing_data(&model, sc.n, &zeta.expand(sc.model.dim)?, seed)?, None)),
        NoiseSpec::KronSum { tau_b, b_edges } => {
            let b_model = ModelSpec::erdos_renyi(sc.n, b_edges.unwrap_or(sc.n), seed.wrapping_add(1));
            let b = b_model.covariance()?;
            Ok((gen_kron_sum(&model, &b, *tau_b, seed)?, Some(b_model)))
        }
    }
}

fn simulate(a: &SimulateArgs, cfg: &FileConfig, seed: Option<u64>, rec: &mut Recorder) -> Result<()> {
    let seed = seed.unwrap_or(0);
    let sc = simulate_config(a, cfg.simulate.as_ref(), seed)?;
    rec.config = json!({ "simulate": sc });
    rec.seeds.push(seed);
    let (ds, b_model) = generate(&sc, seed)?;
    let dir = rec.dir().to_path_buf();
    write_bundle(&dir, &ds, ModelSpec { seed, ..sc.model }, b_model)?;
    for f in BUNDLE_FILES {
        rec.output(f);
    }
    log::info!("wrote bundle n={} m={} to {}", ds.data.nrows(), ds.data.ncols(), dir.display());
    Ok(())
}

fn load_input(args: &crate::args::InputArgs, cfg: &FileConfig, rec: &mut Recorder) -> Result<Loaded> {
    let loaded = inputs::load(args, cfg.covariance)?;
    rec.inputs.push(loaded.path.clone());
    if let Some(s) = loaded.seed {
        rec.seeds.push(s);
    }
    Ok(loaded)
}

/// Serializable summary of one fit, with truth metrics when available.
fn fit_report(fit: &EstimateResult, theta_star: Option<&SymmetricMatrix>) -> Result<serde_json::Value> {
    let metrics = match theta_star {
        Some(t) => Some(json!({
            "relative_errors": relative_errors(&fit.theta_hat, t)?,
            "support": support_metrics(&fit.theta_hat, t, SUPPORT_THRESHOLD)?,
        })),
        None => None,
    };
    let nnz_offdiag = {
        let m = fit.theta_hat.dim();
        (0..m)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .filter(|&(i, j)| fit.theta_hat.get(i, j) != 0.0)
            .count()
    };
    Ok(json!({
        "status": if fit.converged() { "ok" } else { "not_converged" },
        "converged": fit.converged(),
        "nonzero_offdiagonal_pairs": nnz_offdiag,
        "fit": fit,
        "metrics": metrics,
    }))
}

/// Writes `theta_hat.csv` and `report.json` for a fit, or an error report.
fn write_fit(
    rec: &mut Recorder,
    fit: std::result::Result<EstimateResult, Error>,
    theta_star: Option<&SymmetricMatrix>,
    extra: serde_json::Value,
) -> Result<()> {
    match fit {
        Ok(fit) => {
            write_matrix_csv(&rec.output("theta_hat.csv"), &fit.theta_hat)?;
            let mut report = fit_report(&fit, theta_star)?;
            report["input"] = extra;
            write_json(&rec.output("report.json"), &report)?;
            if !fit.converged() {
                log::warn!("solver stopped at max_iter without converging");
            }
            Ok(())
        }
        Err(e) => {
            let report = json!({
                "status": "error",
                "error": e.to_string(),
                "exit_code": e.exit_code(),
                "input": extra,
            });
            write_json(&rec.output("report.json"), &report)?;
            Err(e.into())
        }
    }
}

fn estimate(a: &EstimateArgs, cfg: &FileConfig, rec: &mut Recorder) -> Result<()> {
    let input = load_input(&a.input, cfg, rec)?;
    let spec = build_spec(&a.spec, cfg.estimator.as_ref(), input.theta_star.as_ref(), true)?;
    rec.config = json!({ "input": input.describe(), "estimator": spec });
    let stats = cov_inputs::spectrum_stats_unprojected(&input.gamma)?;
    write_json(&rec.output("spectrum.json"), &stats)?;
    let fit = estimators::estimate(&input.gamma, &spec, input.theta_star.as_ref());
    write_fit(rec, fit, input.theta_star.as_ref(), input.describe())
}

/// Parses labels such as `nonproj-l1`, `proj-mcp`, `nodewise`.
fn parse_estimator(label: &str) -> Result<(EstimatorVariant, PenaltyKind)> {
    let (v, p) = label.split_once('-').unwrap_or((label, "l1"));
    let v = match v {
        "nonproj" => EstimatorVariant::NonprojGlasso,
        "proj" => EstimatorVariant::ProjGlasso,
        "nodewise" => EstimatorVariant::Nodewise,
        _ => return Err(cfg_err(format!("unknown estimator `{label}`"))),
    };
    let p = match p {
        "l1" => PenaltyKind::L1,
        "scad" => PenaltyKind::Scad,
        "mcp" => PenaltyKind::Mcp,
        _ => return Err(cfg_err(format!("unknown penalty in `{label}`"))),
    };
    Ok((v, p))
}

struct Dataset {
    seed: u64,
    gamma: SymmetricMatrix,
    theta_star: Option<SymmetricMatrix>,
}

fn sweep(a: &SweepArgs, cfg: &FileConfig, seed: Option<u64>, jobs: usize, rec: &mut Recorder) -> Result<()> {
    let sc = cfg.sweep.clone().unwrap_or_default();
    let labels = a
        .estimators
        .clone()
        .or(sc.estimators)
        .unwrap_or_else(|| vec!["nonproj-l1".into()]);
    let lambdas = a
        .lambdas
        .clone()
        .or(sc.lambdas)
        .ok_or_else(|| cfg_err("--lambdas is required"))?;
    let radii = a.radii.clone().or(if a.radius_scales.is_some() { None } else { sc.radii });
    let scales = a.radius_scales.clone().or(sc.radius_scales);
    let seeds = a.seeds.clone().or(sc.seeds);
    let mut solver = sc.solver.unwrap_or_default();
    if let Some(r) = a.rho {
        solver.rho = r;
    }
    if let Some(m) = a.max_iter {
        solver.max_iter = m;
    }
    let penalize_diagonal = !a.no_penalize_diagonal && sc.penalize_diagonal.unwrap_or(true);
    let mcp_a = a.mcp_a.or(sc.mcp_a).unwrap_or(2.5);
    let scad_a = a.scad_a.or(sc.scad_a).unwrap_or(3.7);

    let datasets: Vec<Dataset> = match seeds {
        Some(seeds) => {
            if a.input.input.is_some() {
                return Err(cfg_err("--seeds simulates data; drop --input"));
            }
            let sim = cfg
                .simulate
                .as_ref()
                .ok_or_else(|| cfg_err("--seeds needs a `simulate` section in --config"))?;
            rec.seeds.extend(&seeds);
            seeds
                .iter()
                .map(|&s| {
                    let (ds, _) = generate(sim, s)?;
                    let cov = match (&sim.noise, cfg.covariance) {
                        (_, Some(c)) => c,
                        (NoiseSpec::MissingData { .. }, None) => CovarianceKind::MissingData,
                        (NoiseSpec::KronSum { tau_b, .. }, None) => CovarianceKind::KronSum { tau_b: *tau_b },
                    };
                    Ok(Dataset {
                        seed: s,
                        gamma: cov.build(&ds.data)?,
                        theta_star: Some(ds.theta_star),
                    })
                })
                .collect::<Result<_>>()?
        }
        None => {
            let input = load_input(&a.input, cfg, rec)?;
            let s = input.seed.or(seed).unwrap_or(0);
            vec![Dataset {
                seed: s,
                gamma: input.gamma,
                theta_star: input.theta_star,
            }]
        }
    };

    let mut cells = Vec::new();
    for (di, d) in datasets.iter().enumerate() {
        for label in &labels {
            let (v, kind) = parse_estimator(label)?;
            let a = match kind {
                PenaltyKind::Mcp => mcp_a,
                PenaltyKind::Scad => scad_a,
                PenaltyKind::L1 => 0.0,
            };
            let penalty = Penalty::new(kind, lambdas[0], a)?.with_penalize_diagonal(penalize_diagonal);
            let rs: Vec<RadiusSpec> = match (&radii, &scales) {
                (Some(r), _) => r.iter().map(|&r| RadiusSpec::Fixed(r)).collect(),
                (None, Some(s)) => s
                    .iter()
                    .map(|&s| scaled_radius(v, s, d.theta_star.as_ref()))
                    .collect::<Result<_>>()?,
                (None, None) => return Err(cfg_err("--radii or --radius-scales is required")),
            };
            for r in rs {
                let mut spec = EstimatorSpec::new(v, penalty, 1.0);
                spec.radius = r;
                let spec = spec.with_solver(solver);
                spec.validate()?;
                cells.push((di, spec));
            }
        }
    }
    rec.config = json!({
        "estimators": labels,
        "lambdas": lambdas,
        "cells": cells.iter().map(|(_, s)| s).collect::<Vec<_>>(),
    });
    log::info!("{} cells over {} dataset(s), {} worker(s)", cells.len(), datasets.len(), jobs);

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let rows: Vec<Vec<MetricsRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|(di, spec)| {
                let d = &datasets[*di];
                sweep_path(&d.gamma, spec, &lambdas, d.theta_star.as_ref(), d.seed)
            })
            .collect()
    });
    let rows: Vec<MetricsRow> = rows.into_iter().flatten().collect();
    let file = fs::File::create(rec.output("metrics.csv"))?;
    write_metrics_csv(std::io::BufWriter::new(file), &rows)?;
    Ok(())
}

fn tune(a: &TuneArgs, cfg: &FileConfig, seed: Option<u64>, rec: &mut Recorder) -> Result<()> {
    let tc = cfg.tune.clone().unwrap_or_default();
    let input = load_input(&a.input, cfg, rec)?;
    let spec = build_spec(&a.spec, cfg.estimator.as_ref(), input.theta_star.as_ref(), false)?;
    let criterion = match (a.criterion, tc.criterion) {
        (Some(CriterionArg::Bic), _) => Criterion::Bic,
        (Some(CriterionArg::Cv), _) => Criterion::Cv,
        (None, Some(c)) => c,
        (None, None) => return Err(cfg_err("--criterion is required")),
    };
    let grid = a
        .lambdas
        .clone()
        .or(tc.lambdas)
        .ok_or_else(|| cfg_err("--lambdas is required"))?;
    let folds = a.folds.or(tc.folds).unwrap_or(5);
    let seed = seed.unwrap_or(0);
    rec.seeds.push(seed);
    rec.config = json!({
        "input": input.describe(),
        "estimator": spec,
        "criterion": criterion,
        "lambdas": grid,
        "folds": folds,
    });
    let oracle = input.theta_star.as_ref();
    let data: &MaskedData = &input.data;
    let result = match criterion {
        Criterion::Bic => bic_select(data, &grid, &spec, input.covariance, oracle)?,
        Criterion::Cv => cross_validate(
            data,
            &grid,
            &spec,
            &CvOptions {
                folds,
                seed,
                covariance: input.covariance,
                estimate_zeta: a.estimate_zeta || tc.estimate_zeta.unwrap_or(false),
            },
            oracle,
        )?,
    };
    write_json(&rec.output("tuning.json"), &result)?;
    log::info!("chose λ = {}", result.chosen);
    let spec = spec.with_lambda(result.chosen)?;
    let fit = estimators::estimate(&input.gamma, &spec, oracle);
    write_fit(rec, fit, oracle, input.describe())
}

fn graph(a: &GraphArgs, cfg: &FileConfig, rec: &mut Recorder) -> Result<()> {
    let mut opts = cfg.graph.clone().unwrap_or_default();
    if let Some(t) = a.threshold {
        opts.threshold = t;
    }
    opts.demean_by_party |= a.demean_by_party;
    opts.transpose |= a.transpose;
    if a.keep_unanimous {
        opts.drop_unanimous = false;
    }
    if a.min_coverage.is_some() {
        opts.min_coverage = a.min_coverage;
    }
    let base = cfg.estimator.unwrap_or(opts.spec);
    opts.spec = build_spec(&a.spec, Some(&base), None, false)?;
    let opts: GraphOptions = opts;
    rec.config = json!({ "graph": opts });
    rec.inputs.push(a.votes.clone());
    let table = read_votes(&a.votes, !a.no_header, missing_token(a.missing))?;
    let parties = match &a.parties {
        Some(p) => {
            rec.inputs.push(p.clone());
            Some(read_parties(p)?)
        }
        None => None,
    };
    let g = build_vote_graph(&table, parties.as_deref(), &opts)?;
    fs::write(rec.output("graph.dot"), g.to_dot())?;
    fs::write(rec.output("edges.csv"), g.edge_list_csv()?)?;
    log::info!("{} edges among {} subjects", g.edges().count(), g.names.len());
    Ok(())
}

fn spectrum(a: &SpectrumArgs, cfg: &FileConfig, rec: &mut Recorder) -> Result<()> {
    let input = load_input(&a.input, cfg, rec)?;
    rec.config = json!({ "input": input.describe(), "skip_projection": a.skip_projection });
    let stats = if a.skip_projection {
        cov_inputs::spectrum_stats_unprojected(&input.gamma)?
    } else {
        cov_inputs::spectrum_stats(&input.gamma)?
    };
    write_json(&rec.output("spectrum.json"), &stats)?;
    Ok(())
}
