//! Experiment runners. Each one writes its CSVs into a [`RunDir`] and
//! returns the summary as JSON.
//!
//! Every random quantity comes from a fixed `(seed, stream)` pair and,
//! inside Monte Carlo loops, from a per-item substream, so results do not
//! depend on the number of worker threads.

use idprior_core::bayes_core::{
    evidence_from_potentials, DrawBank, NoiseSpec, PosteriorProblem, PriorModel, BOOTSTRAP_RESAMPLES,
};
use idprior_core::distributions::GpqParams;
use idprior_core::forward_models::{gaussian_bump_kernel, DeconvModel, ForwardModel, QuadModel};
use idprior_core::grid::GridField;
use idprior_core::inference::{
    map_gpq_eps, map_lp, mh_sample, posterior_summaries, support_f1, sparse_instance, MapConfig, MapResult,
    McmcConfig, DEFAULT_WEIGHT_FLOOR,
};
use idprior_core::levy_process::{
    sample_bv_field_2d, sample_cpp_path, sample_hybrid_path, GpSampler, GpSampler2D, GpSpec, JumpPath,
};
use idprior_core::metrics::{
    consistency_from_potentials, expectation_gap_from_potentials,
    projected_potentials_for_draw, stability_from_bank, DistanceReport, DistanceRow,
};
use idprior_core::nalgebra::DMatrix;
use idprior_core::product_prior::{BasisSpec, CoefficientLaw, ProductPriorSpec, WeightRule, WeightSequence};
use idprior_core::rng::RngState;
use idprior_core::stats::{mean, sorted};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    ConjugateToy, Experiment, ExperimentConfig, ForwardConfig, MapBenchSection, MapSection, PriorConfig, TruthConfig,
};
use crate::error::CliError;
use crate::output::{field_rows, indexed_rows, read_indexed_csv, Cell, RunDir};

pub const STREAM_TRUTH: u64 = 1;
pub const STREAM_NOISE: u64 = 2;
pub const STREAM_SENSING: u64 = 3;
pub const STREAM_MCMC: u64 = 4;
pub const STREAM_BANK: u64 = 5;
pub const STREAM_BOOTSTRAP: u64 = 6;
pub const STREAM_BENCH: u64 = 7;
pub const STREAM_MAP: u64 = 8;
pub const STREAM_TOY: u64 = 9;
pub const STREAM_EVIDENCE: u64 = 10;

/// Prior draws behind the evidence reported by the MCMC experiments.
pub const EVIDENCE_DRAWS: usize = 10_000;

pub const BAND_PROBS: [f64; 3] = [0.05, 0.5, 0.95];

/// Seed for a component that takes a bare `u64`.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    RngState::new(seed, stream).substream(0).seed
}

/// `f(0..n)` in order; sequential in reference mode, otherwise on the rayon pool.
pub fn par_map<T, F>(n: usize, reference: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if reference {
        (0..n).map(f).collect()
    } else {
        (0..n).into_par_iter().map(f).collect()
    }
}

fn collect<T>(items: Vec<Result<T, idprior_core::error::Error>>) -> Result<Vec<T>, CliError> {
    items.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

/// Prior, forward map and discretization for the data-model experiments.
pub struct Model {
    pub prior: PriorModel,
    pub forward: ForwardModel,
    pub grid: usize,
    pub truncation: usize,
}

impl Model {
    pub fn spec(&self) -> Option<&ProductPriorSpec> {
        match &self.prior {
            PriorModel::Product(s) => Some(s),
            PriorModel::JumpProcess { .. } => None,
        }
    }
}

pub fn build_model(cfg: &ExperimentConfig) -> Result<Model, CliError> {
    let grid = cfg.grid();
    let prior = match cfg.prior() {
        p @ PriorConfig::Product { .. } => PriorModel::Product(p.product_spec().map_err(CliError::config)?.expect("product")),
        PriorConfig::JumpProcess { rate, jump } => PriorModel::JumpProcess {
            rate: *rate,
            law: jump.to_law().map_err(|e| CliError::config(format!("prior.jump: {e}")))?,
        },
        _ => return Err(CliError::config(format!("prior: kind not supported by {}", cfg.experiment))),
    };
    let forward = match cfg.forward() {
        ForwardConfig::Deconv { kernel_width, .. } => {
            let kernel = gaussian_bump_kernel(grid, *kernel_width)?;
            ForwardModel::Deconv(DeconvModel::new(kernel, cfg.forward().points())?)
        }
        ForwardConfig::Quadratic { n_points, n_obs } => {
            let mut rng = RngState::new(cfg.seed, STREAM_SENSING).rng();
            ForwardModel::Quadratic(QuadModel::random(*n_obs, *n_points, &mut rng)?)
        }
    };
    Ok(Model {
        prior,
        forward,
        grid,
        truncation: cfg.prior().truncation().unwrap_or(0),
    })
}

/// Ground truth, its clean forward image and noisy data.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub truth: GridField,
    pub truth_coefficients: Option<Vec<f64>>,
    pub truth_path: Option<JumpPath>,
    pub clean: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn synthesize(cfg: &ExperimentConfig, model: &Model) -> Result<Synthetic, CliError> {
    let mut coeffs = None;
    let mut path = None;
    let truth = match cfg.truth() {
        TruthConfig::PriorDraw => {
            let mut rng = RngState::new(cfg.seed, STREAM_TRUTH).rng();
            match &model.prior {
                PriorModel::Product(spec) => {
                    let mut c = spec.sample_coefficients(&mut rng);
                    c.truncate(model.truncation);
                    let u = spec.synthesize(&c, model.grid)?;
                    coeffs = Some(c);
                    u
                }
                PriorModel::JumpProcess { rate, law } => {
                    let p = sample_cpp_path(*rate, law, &mut rng)?;
                    let u = p.rasterize(model.grid);
                    path = Some(p);
                    u
                }
            }
        }
        TruthConfig::Coefficients { values } => {
            let spec = model
                .spec()
                .ok_or_else(|| CliError::config("truth: `coefficients` needs a product prior"))?;
            coeffs = Some(values.clone());
            spec.synthesize(values, model.grid)?
        }
        TruthConfig::JumpPath { times, sizes } => {
            let p = JumpPath::new(times.clone(), sizes.clone())?;
            let u = p.rasterize(model.grid);
            path = Some(p);
            u
        }
        TruthConfig::Zero => GridField::zeros(model.grid),
    };
    let clean = model.forward.forward(&truth)?;
    let sigma = cfg.sigma();
    let mut rng = RngState::new(cfg.seed, STREAM_NOISE).rng();
    let y = clean
        .iter()
        .map(|c| {
            let g: f64 = StandardNormal.sample(&mut rng);
            c + sigma * g
        })
        .collect();
    Ok(Synthetic {
        truth,
        truth_coefficients: coeffs,
        truth_path: path,
        clean,
        y,
    })
}

fn write_synthetic(run: &mut RunDir, syn: &Synthetic) -> Result<(), CliError> {
    run.write_csv("truth.csv", &["x", "value"], &field_rows(syn.truth.values()))?;
    run.write_csv("clean.csv", &["index", "value"], &indexed_rows(&syn.clean))?;
    run.write_csv("y.csv", &["index", "value"], &indexed_rows(&syn.y))?;
    if let Some(c) = &syn.truth_coefficients {
        run.write_csv("truth_coefficients.csv", &["index", "value"], &indexed_rows(c))?;
    }
    if let Some(p) = &syn.truth_path {
        run.write_csv("truth_jumps.csv", &["time", "size"], &jump_rows(p))?;
    }
    Ok(())
}

fn jump_rows(p: &JumpPath) -> Vec<Vec<Cell>> {
    p.times()
        .iter()
        .zip(p.sizes())
        .map(|(t, s)| vec![Cell::Float(*t), Cell::Float(*s)])
        .collect()
}

pub fn make_synthetic(cfg: &ExperimentConfig, run: &mut RunDir) -> Result<Value, CliError> {
    if !cfg.experiment.has_data_model() {
        return Err(CliError::config(format!("experiment: `{}` has no data model", cfg.experiment)));
    }
    let model = build_model(cfg)?;
    let syn = synthesize(cfg, &model)?;
    write_synthetic(run, &syn)?;
    let resid: Vec<f64> = syn.y.iter().zip(&syn.clean).map(|(y, c)| y - c).collect();
    Ok(json!({
        "experiment": cfg.experiment.name(),
        "seed": cfg.seed,
        "sigma": cfg.sigma(),
        "n_obs": syn.y.len(),
        "grid_size": model.grid,
        "truth_l2_norm": syn.truth.l2_norm(),
        "residual_rms": (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt(),
    }))
}

/// Observations from `data_file`, or synthetic data written alongside.
fn observations(cfg: &ExperimentConfig, model: &Model, run: &mut RunDir) -> Result<(Vec<f64>, Option<Synthetic>), CliError> {
    match &cfg.data_file {
        Some(path) => {
            let y = read_indexed_csv(std::path::Path::new(path)).map_err(|e| CliError::config(format!("data_file: {e}")))?;
            if y.len() != model.forward.n_obs() {
                return Err(CliError::config(format!(
                    "data_file: {} values, but the forward map has {} observations",
                    y.len(),
                    model.forward.n_obs()
                )));
            }
            run.write_csv("y.csv", &["index", "value"], &indexed_rows(&y))?;
            Ok((y, None))
        }
        None => {
            let syn = synthesize(cfg, model)?;
            write_synthetic(run, &syn)?;
            Ok((syn.y.clone(), Some(syn)))
        }
    }
}

fn problem(cfg: &ExperimentConfig, model: &Model, y: Vec<f64>) -> Result<PosteriorProblem, CliError> {
    let sigma = cfg.sigma();
    if !(sigma > 0.0) {
        return Err(CliError::config(
            "noise.sigma: must be > 0 to run inference (0 is only meaningful for make-synthetic)",
        ));
    }
    let noise = NoiseSpec::isotropic(y.len(), sigma)?;
    Ok(PosteriorProblem::new(
        model.prior.clone(),
        model.forward.clone(),
        noise,
        y,
        model.grid,
        model.truncation,
    )?)
}

pub fn run(cfg: &ExperimentConfig, run: &mut RunDir, reference: bool) -> Result<Value, CliError> {
    let mut summary = match cfg.experiment {
        Experiment::SamplePrior => run_sample_prior(cfg, run, reference)?,
        Experiment::DeconvGpq | Experiment::DeconvBv | Experiment::Quadratic => run_inference(cfg, run, reference)?,
        Experiment::StabilitySuite => run_stability(cfg, run, reference)?,
        Experiment::ConsistencySuite => run_consistency(cfg, run, reference)?,
        Experiment::MapBench => run_map_bench(cfg, run, reference)?,
    };
    let obj = summary.as_object_mut().expect("summaries are objects");
    obj.insert("experiment".into(), json!(cfg.experiment.name()));
    obj.insert("seed".into(), json!(cfg.seed));
    Ok(summary)
}

fn prior_draw_summary(u: &GridField) -> Value {
    json!({
        "l2_norm": u.l2_norm(),
        "sup_norm": u.sup_norm(),
        "discrete_variation": u.discrete_variation(),
    })
}

fn run_sample_prior(cfg: &ExperimentConfig, run: &mut RunDir, reference: bool) -> Result<Value, CliError> {
    let n = cfg.sampling.as_ref().map_or(1, |s| s.n_draws);
    let grid = cfg.grid();
    let base = RngState::new(cfg.seed, STREAM_TRUTH);
    let mut per_draw = Vec::with_capacity(n);
    let mut field_out = Vec::new();
    match cfg.prior() {
        p @ PriorConfig::Product { .. } => {
            let spec = p.product_spec().map_err(CliError::config)?.expect("product");
            let trunc = p.truncation().unwrap_or(spec.terms());
            let draws = collect(par_map(n, reference, |i| {
                let mut c = spec.sample_coefficients(&mut base.substream(i as u64).rng());
                c.truncate(trunc);
                spec.synthesize(&c, grid).map(|u| (c, u))
            }))?;
            let mut coeff_rows = Vec::new();
            for (d, (c, u)) in draws.iter().enumerate() {
                let mut s = prior_draw_summary(u);
                s["nonzero_coefficients"] = json!(c.iter().filter(|v| **v != 0.0).count());
                per_draw.push(s);
                for (k, v) in c.iter().enumerate() {
                    coeff_rows.push(vec![Cell::from(d), Cell::from(k), Cell::Float(*v)]);
                }
                field_out.push(u.clone());
            }
            run.write_csv("coefficients.csv", &["draw", "index", "value"], &coeff_rows)?;
        }
        PriorConfig::JumpProcess { rate, jump } => {
            let law = jump.to_law().map_err(CliError::config)?;
            let paths = collect(par_map(n, reference, |i| sample_cpp_path(*rate, &law, &mut base.substream(i as u64).rng())))?;
            let mut rows = Vec::new();
            for (d, p) in paths.iter().enumerate() {
                let u = p.rasterize(grid);
                let mut s = prior_draw_summary(&u);
                s["jump_count"] = json!(p.jump_count());
                s["path_tv"] = json!(p.tv());
                per_draw.push(s);
                for (t, z) in p.times().iter().zip(p.sizes()) {
                    rows.push(vec![Cell::from(d), Cell::Float(*t), Cell::Float(*z)]);
                }
                field_out.push(u);
            }
            run.write_csv("jumps.csv", &["draw", "time", "size"], &rows)?;
        }
        PriorConfig::Gp { bandwidth, mean } => {
            let gp = GpSampler::new(GpSpec::new(*bandwidth, grid).with_mean(*mean))?;
            for u in par_map(n, reference, |i| gp.sample(&mut base.substream(i as u64).rng())) {
                let mut s = prior_draw_summary(&u);
                s["jitter"] = json!(gp.jitter());
                per_draw.push(s);
                field_out.push(u);
            }
        }
        PriorConfig::Hybrid { bandwidth, rate, jump } => {
            let law = jump.to_law().map_err(CliError::config)?;
            let gp = GpSampler::new(GpSpec::new(*bandwidth, grid))?;
            let draws = collect(par_map(n, reference, |i| {
                sample_hybrid_path(&gp, *rate, &law, &mut base.substream(i as u64).rng())
            }))?;
            let mut rows = Vec::new();
            for (d, h) in draws.into_iter().enumerate() {
                let mut s = prior_draw_summary(&h.field);
                s["jump_count"] = json!(h.jumps.jump_count());
                per_draw.push(s);
                let jumps = h.jumps.rasterize(grid);
                for (i, (a, b)) in h.smooth.values().iter().zip(jumps.values()).enumerate() {
                    rows.push(vec![Cell::from(d), Cell::Float(i as f64 / grid as f64), Cell::Float(*a), Cell::Float(*b)]);
                }
                field_out.push(h.field);
            }
            run.write_csv("components.csv", &["draw", "x", "smooth", "jumps"], &rows)?;
        }
        PriorConfig::BvField2d { n: side, bandwidth, rate, jump } => {
            let law = jump.to_law().map_err(CliError::config)?;
            let gp = GpSampler2D::new(GpSpec::new(*bandwidth, *side))?;
            let draws = collect(par_map(n, reference, |i| {
                sample_bv_field_2d(&gp, *rate, &law, &mut base.substream(i as u64).rng())
            }))?;
            let mut rows = Vec::new();
            for (d, b) in draws.iter().enumerate() {
                per_draw.push(json!({
                    "arrival_count": b.arrival_count(),
                    "active_arrival_count": b.active_arrival_count(),
                    "occupied_level_count": b.occupied_level_count(),
                    "distinct_value_count": b.distinct_value_count(),
                    "discrete_variation": b.field.discrete_variation(),
                }));
                let h = b.field.spacing();
                for i in 0..*side {
                    for j in 0..*side {
                        rows.push(vec![
                            Cell::from(d),
                            Cell::from(i),
                            Cell::from(j),
                            Cell::Float(j as f64 * h),
                            Cell::Float(i as f64 * h),
                            Cell::Float(b.field.get(i, j)),
                        ]);
                    }
                }
            }
            run.write_csv("samples.csv", &["draw", "i", "j", "x", "y", "value"], &rows)?;
            return Ok(json!({"n_draws": n, "draws": per_draw}));
        }
    }
    let mut rows = Vec::new();
    for (d, u) in field_out.iter().enumerate() {
        for (i, v) in u.values().iter().enumerate() {
            rows.push(vec![Cell::from(d), Cell::Float(i as f64 / grid as f64), Cell::Float(*v)]);
        }
    }
    run.write_csv("samples.csv", &["draw", "x", "value"], &rows)?;
    Ok(json!({"n_draws": n, "draws": per_draw}))
}

fn rel_error(est: &[f64], truth: &[f64]) -> f64 {
    let num: f64 = est.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = truth.iter().map(|b| b * b).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

fn median(xs: &[f64]) -> f64 {
    let s = sorted(xs);
    if s.is_empty() {
        return f64::NAN;
    }
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// MCMC for deconv_gpq, deconv_bv and quadratic, plus MAP for deconv_gpq.
fn run_inference(cfg: &ExperimentConfig, run: &mut RunDir, reference: bool) -> Result<Value, CliError> {
    let model = build_model(cfg)?;
    let (y, syn) = observations(cfg, &model, run)?;
    let problem = problem(cfg, &model, y.clone())?;
    let mc = cfg.mcmc.as_ref().expect("mcmc section resolved by defaults");
    let mcmc = McmcConfig {
        n_steps: mc.n_steps,
        burn_in: mc.burn_in,
        proposal_scale: mc.proposal_scale,
        adapt: mc.adapt,
        thin: mc.thin,
        seed: stream_seed(cfg.seed, STREAM_MCMC),
    };
    let chain = mh_sample(&problem, &mcmc)?;
    let bank = parallel_bank(&problem, EVIDENCE_DRAWS, &RngState::new(cfg.seed, STREAM_EVIDENCE), reference)?;
    let evidence = evidence_json(
        &bank.potentials(&problem.whitened_data()),
        &RngState::new(cfg.seed, STREAM_EVIDENCE).substream(u64::MAX),
    )?;

    let width = chain.samples.first().map_or(0, |s| s.len());
    let prefix = if model.spec().is_some() { "c" } else { "u" };
    let names: Vec<String> = (0..width).map(|k| format!("{prefix}{k}")).collect();
    let mut header = vec!["step", "potential"];
    header.extend(names.iter().map(String::as_str));
    let rows: Vec<Vec<Cell>> = chain
        .samples
        .iter()
        .zip(&chain.potentials)
        .enumerate()
        .map(|(i, (s, phi))| {
            let mut r = vec![Cell::from(mc.burn_in + i * mc.thin), Cell::Float(*phi)];
            r.extend(s.iter().map(|v| Cell::Float(*v)));
            r
        })
        .collect();
    run.write_csv("chain.csv", &header, &rows)?;

    let state_summary = posterior_summaries(&chain.samples, &BAND_PROBS)?;
    // coordinates that never move (e.g. u(0) = 0 for jump paths) carry no mixing information
    let moving_ess: Vec<f64> = state_summary
        .ess
        .iter()
        .enumerate()
        .filter(|(k, _)| chain.samples.iter().any(|s| s[*k] != chain.samples[0][*k]))
        .map(|(_, e)| *e)
        .collect();
    let fields: Vec<Vec<f64>> = match model.spec() {
        Some(spec) => chain
            .samples
            .iter()
            .map(|c| spec.synthesize(c, model.grid).map(GridField::into_values))
            .collect::<Result<_, _>>()?,
        None => chain.samples.clone(),
    };
    let field_summary = posterior_summaries(&fields, &BAND_PROBS)?;
    run.write_csv("posterior_mean.csv", &["x", "value"], &field_rows(&field_summary.mean))?;
    let band: Vec<Vec<Cell>> = (0..model.grid)
        .map(|i| {
            let mut r = vec![Cell::Float(i as f64 / model.grid as f64)];
            r.extend(field_summary.quantiles.iter().map(|q| Cell::Float(q[i])));
            r
        })
        .collect();
    run.write_csv("posterior_band.csv", &["x", "q05", "q50", "q95"], &band)?;

    let mut summary = json!({
        "n_samples": chain.samples.len(),
        "acceptance_rate": chain.acceptance_rate,
        "burn_in_acceptance_rate": chain.burn_in_acceptance_rate,
        "proposal": format!("{:?}", chain.proposal),
        "ess_min": moving_ess.iter().cloned().fold(f64::INFINITY, f64::min),
        "ess_median": median(&moving_ess),
        "constant_coordinates": state_summary.ess.len() - moving_ess.len(),
        "potential_mean": mean(&chain.potentials),
        "posterior_mean_discrete_variation": GridField::new(field_summary.mean.clone()).discrete_variation(),
        "evidence": evidence,
    });
    if let Some(syn) = &syn {
        let t = syn.truth.values();
        summary["truth_discrete_variation"] = json!(syn.truth.discrete_variation());
        summary["rel_error_posterior_mean"] = json!(rel_error(&field_summary.mean, t));
        if cfg.experiment == Experiment::Quadratic {
            let neg: Vec<f64> = field_summary.mean.iter().map(|v| -v).collect();
            summary["rel_error_posterior_mean_up_to_sign"] =
                json!(rel_error(&field_summary.mean, t).min(rel_error(&neg, t)));
        }
        let inside = (0..model.grid)
            .filter(|&i| field_summary.quantiles[0][i] <= t[i] && t[i] <= field_summary.quantiles[2][i])
            .count();
        summary["band_coverage"] = json!(inside as f64 / model.grid as f64);
    }

    if let (Experiment::DeconvGpq, Some(map)) = (cfg.experiment, &cfg.map) {
        let spec = model.spec().expect("deconv_gpq uses a product prior");
        let CoefficientLaw::Gpq(params) = spec.law else {
            return Err(CliError::config("prior.law: MAP needs a gpq law"));
        };
        let (xi, res) = map_in_xi(&problem, spec, params, map, cfg.sigma(), &y, stream_seed(cfg.seed, STREAM_MAP))?;
        let gammas = &spec.weights.values()[..model.truncation];
        let c: Vec<f64> = xi.iter().zip(gammas).map(|(x, g)| x * g).collect();
        let u = spec.synthesize(&c, model.grid)?;
        run.write_csv("map.csv", &["x", "value"], &field_rows(u.values()))?;
        let rows: Vec<Vec<Cell>> = xi
            .iter()
            .zip(&c)
            .enumerate()
            .map(|(k, (x, c))| vec![Cell::from(k), Cell::Float(*x), Cell::Float(*c)])
            .collect();
        run.write_csv("map_coefficients.csv", &["index", "xi", "coefficient"], &rows)?;
        let mut m = json!({
            "objective": res.objective,
            "iterations": res.iterations,
            "converged": res.converged,
            "start": format!("{:?}", res.start),
            "epsilon": map.epsilon,
            "near_zero_fraction": xi.iter().filter(|v| v.abs() < 10.0 * map.epsilon).count() as f64 / xi.len() as f64,
        });
        if let Some(syn) = &syn {
            m["rel_error"] = json!(rel_error(u.values(), syn.truth.values()));
        }
        summary["map"] = m;
    }
    Ok(summary)
}

/// MAP over `ξ` with `c_k = γ_k ξ_k`: the design is the compiled operator
/// with columns scaled by `γ_k`.
fn map_in_xi(
    problem: &PosteriorProblem,
    spec: &ProductPriorSpec,
    params: GpqParams,
    map: &MapSection,
    sigma: f64,
    y: &[f64],
    seed: u64,
) -> Result<(Vec<f64>, MapResult), CliError> {
    let op = problem.compile()?;
    let mut a: DMatrix<f64> = op.inner.clone();
    for (k, g) in spec.weights.values()[..problem.truncation].iter().enumerate() {
        a.column_mut(k).scale_mut(*g);
    }
    let res = map_gpq_eps(&a, y, sigma, params, map.epsilon, &map_config(map, seed))?;
    Ok((res.z.clone(), res))
}

fn map_config(map: &MapSection, seed: u64) -> MapConfig {
    MapConfig {
        max_iter: map.max_iter,
        tol: map.tol,
        n_starts: map.n_starts,
        weight_floor: DEFAULT_WEIGHT_FLOOR,
        seed,
    }
}

/// The same prior draws as [`PosteriorProblem::draw_bank`], computed on the pool.
pub fn parallel_bank(problem: &PosteriorProblem, n: usize, state: &RngState, reference: bool) -> Result<DrawBank, CliError> {
    let compiled = match problem.prior {
        PriorModel::Product(_) => Some(problem.compile()?),
        PriorModel::JumpProcess { .. } => None,
    };
    let entries = collect(par_map(n, reference, |i| {
        let mut rng = state.substream(i as u64).rng();
        let draw = problem.draw_prior(&mut rng)?;
        problem.bank_entry(compiled.as_ref(), &draw)
    }))?;
    let mut bank = DrawBank::with_capacity(problem.n_obs(), n);
    for (p, h) in &entries {
        bank.push(p, *h);
    }
    Ok(bank)
}

/// One coefficient `c ~ N(0, γ²)` observed directly: `y = c + σ η`.
pub fn conjugate_problem(toy: &ConjugateToy) -> Result<PosteriorProblem, CliError> {
    let basis = BasisSpec::fourier(1)?;
    let weights = WeightSequence::new(WeightRule::Explicit(vec![toy.gamma]), 1)?;
    let spec = ProductPriorSpec::new(basis, weights, CoefficientLaw::Gpq(GpqParams::standard_normal()))?;
    let forward = ForwardModel::Deconv(DeconvModel::new(GridField::constant(4, 1.0), vec![0.0])?);
    Ok(PosteriorProblem::new(
        PriorModel::Product(spec),
        forward,
        NoiseSpec::isotropic(1, toy.sigma)?,
        vec![toy.y],
        4,
        1,
    )?)
}

/// Closed-form Hellinger distance between the toy posteriors for data `y` and `y + δ`.
pub fn conjugate_hellinger(toy: &ConjugateToy, delta: f64) -> f64 {
    let s2 = 1.0 / (1.0 / (toy.gamma * toy.gamma) + 1.0 / (toy.sigma * toy.sigma));
    let shift = s2 * delta / (toy.sigma * toy.sigma);
    (-(-shift * shift / (8.0 * s2)).exp_m1()).sqrt()
}

/// `Z(y)` from potentials on prior draws. A value below the smallest
/// positive double is still reported through its logarithm.
pub fn evidence_json(phi: &[f64], state: &RngState) -> Result<Value, CliError> {
    let mut rng = state.rng();
    match evidence_from_potentials(phi, BOOTSTRAP_RESAMPLES, &mut rng) {
        Ok(e) => Ok(json!({
            "log_evidence": e.log_z,
            "evidence": e.z,
            "se": e.se,
            "bootstrap_se": e.bootstrap_se,
            "ess": e.ess,
            "n_draws": e.n_samples,
            "positive": e.z > 0.0,
        })),
        Err(idprior_core::error::Error::EvidenceUnderflow { log_z }) => Ok(json!({
            "log_evidence": log_z,
            "evidence": 0.0,
            "n_draws": phi.len(),
            "positive": log_z.is_finite(),
            "underflows_f64": true,
        })),
        Err(e) => Err(e.into()),
    }
}

fn report_cells(key: Cell, r: &DistanceReport) -> Vec<Cell> {
    vec![
        key,
        Cell::Float(r.hellinger.value),
        Cell::Float(r.hellinger.se),
        Cell::Float(r.tv.value),
        Cell::Float(r.tv.se),
        Cell::Float(r.ess_a),
        Cell::Float(r.ess_b),
    ]
}

const METRICS_HEADER: [&str; 7] = ["delta_or_N", "d_H", "d_H_se", "d_TV", "d_TV_se", "ess_A", "ess_B"];

fn bounds_json(rows: &[DistanceRow]) -> Value {
    let lower = rows.iter().all(|r| r.report.tv_hellinger_bounds_hold(4.0).0);
    let upper = rows.iter().all(|r| r.report.tv_hellinger_bounds_hold(4.0).1);
    json!({"lower_2dh2_le_dtv": lower, "upper_dtv_le_sqrt8_dh": upper})
}

fn run_stability(cfg: &ExperimentConfig, run: &mut RunDir, reference: bool) -> Result<Value, CliError> {
    let st = cfg.stability.as_ref().expect("stability section resolved by defaults");
    let model = build_model(cfg)?;
    let (y, _) = observations(cfg, &model, run)?;
    let problem = problem(cfg, &model, y)?;
    let m = problem.n_obs();
    let direction = st.direction.clone().unwrap_or_else(|| {
        let mut e = vec![0.0; m];
        e[0] = 1.0;
        e
    });
    let bank = parallel_bank(&problem, st.n_draws, &RngState::new(cfg.seed, STREAM_BANK), reference)?;
    let boot = RngState::new(cfg.seed, STREAM_BOOTSTRAP);
    let report = stability_from_bank(&problem, &bank, &direction, &st.deltas, BOOTSTRAP_RESAMPLES, &boot.substream(0))?;
    let rows: Vec<Vec<Cell>> = report.rows.iter().map(|r| report_cells(Cell::Float(r.key), &r.report)).collect();
    run.write_csv("metrics.csv", &METRICS_HEADER, &rows)?;

    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    let shifted: Vec<f64> = problem
        .data
        .iter()
        .zip(&direction)
        .map(|(y, e)| y + st.gap_delta * e / norm)
        .collect();
    let pa = bank.potentials(&problem.whitened_data());
    let pb = bank.potentials(&problem.noise.whiten(&shifted));
    let gap = expectation_gap_from_potentials(&pa, &pb, bank.h(), BOOTSTRAP_RESAMPLES, &mut boot.substream(1).rng())?;
    let evidence = evidence_json(&pa, &boot.substream(3))?;

    let mut summary = json!({
        "n_draws": st.n_draws,
        "slope_hellinger": report.slope_hellinger,
        "slope_tv": report.slope_tv,
        "slope_in_0.8_1.2": (0.8..=1.2).contains(&report.slope_hellinger),
        "tv_hellinger_bounds": bounds_json(&report.rows),
        "expectation_gap": {
            "delta": st.gap_delta,
            "gap": gap.gap.value,
            "gap_se": gap.gap.se,
            "bound": gap.bound.value,
            "bound_se": gap.bound.se,
            "hellinger": gap.hellinger,
            "holds": gap.holds,
        },
        "evidence": evidence,
    });

    if let Some(toy) = &st.conjugate {
        let tp = conjugate_problem(toy)?;
        let tbank = parallel_bank(&tp, st.n_draws, &RngState::new(cfg.seed, STREAM_TOY), reference)?;
        let tr = stability_from_bank(&tp, &tbank, &[1.0], &st.deltas, BOOTSTRAP_RESAMPLES, &boot.substream(2))?;
        let rows: Vec<Vec<Cell>> = tr
            .rows
            .iter()
            .map(|r| {
                let mut c = report_cells(Cell::Float(r.key), &r.report);
                c.push(Cell::Float(conjugate_hellinger(toy, r.key)));
                c
            })
            .collect();
        let mut header = METRICS_HEADER.to_vec();
        header.push("d_H_exact");
        run.write_csv("conjugate_metrics.csv", &header, &rows)?;
        let within = tr
            .rows
            .iter()
            .filter(|r| r.key > 0.0)
            .filter(|r| r.report.hellinger.within(conjugate_hellinger(toy, r.key), 4.0))
            .count();
        summary["conjugate"] = json!({
            "slope_hellinger": tr.slope_hellinger,
            "slope_tv": tr.slope_tv,
            "slope_in_0.9_1.1": (0.9..=1.1).contains(&tr.slope_hellinger),
            "rows_within_4se_of_exact": within,
            "tv_hellinger_bounds": bounds_json(&tr.rows),
        });
    }
    Ok(summary)
}

fn run_consistency(cfg: &ExperimentConfig, run: &mut RunDir, reference: bool) -> Result<Value, CliError> {
    let cs = cfg.consistency.as_ref().expect("consistency section resolved by defaults");
    let model = build_model(cfg)?;
    let (y, _) = observations(cfg, &model, run)?;
    let problem = problem(cfg, &model, y)?;
    let mut n_list = cs.n_list.clone();
    if n_list.last() != Some(&problem.truncation) {
        n_list.push(problem.truncation);
    }
    let op = problem.compile()?;
    let y_white = problem.whitened_data();
    let draws = RngState::new(cfg.seed, STREAM_BANK);
    let phi = collect(par_map(cs.n_draws, reference, |i| {
        projected_potentials_for_draw(&problem, &op, &n_list, &y_white, &draws.substream(i as u64))
    }))?;
    let report = consistency_from_potentials(
        &problem,
        &n_list,
        &phi,
        BOOTSTRAP_RESAMPLES,
        &RngState::new(cfg.seed, STREAM_BOOTSTRAP),
    )?;
    let rows: Vec<Vec<Cell>> = report.rows.iter().map(|r| report_cells(Cell::from(r.n), &r.report)).collect();
    run.write_csv("metrics.csv", &METRICS_HEADER, &rows)?;
    let full_phi: Vec<f64> = phi.iter().map(|r| r[n_list.len() - 1]).collect();
    let evidence = evidence_json(&full_phi, &RngState::new(cfg.seed, STREAM_BOOTSTRAP).substream(u64::MAX))?;
    let user = &report.rows[..cs.n_list.len()];
    let first = user[0].report.hellinger.value;
    let last = user[user.len() - 1].report.hellinger.value;
    let full = &report.rows[report.rows.len() - 1];
    let tails: Vec<Value> = report
        .rows
        .iter()
        .map(|r| json!({"n": r.n, "tail_energy": r.tail_energy}))
        .collect();
    Ok(json!({
        "n_draws": cs.n_draws,
        "truncation": problem.truncation,
        "monotone_up_to_se": report.monotone_up_to_se,
        "ratio_last_to_first": last / first,
        "slope_vs_tail_energy": report.slope_vs_tail,
        "full_distance": full.report.hellinger.value,
        "tail_energy": tails,
        "tv_hellinger_bounds": bounds_json(
            &report
                .rows
                .iter()
                .map(|r| DistanceRow { key: r.n as f64, report: r.report.clone() })
                .collect::<Vec<_>>()
        ),
        "evidence": evidence,
    }))
}

/// Per-instance results of the sparse-recovery comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub f1_p: f64,
    pub f1_l1: f64,
    pub f1_gpq: f64,
    /// Fraction of off-support entries of the `G_{p,q}` estimate below `10 ε`.
    pub off_support_small: f64,
    pub iterations: [usize; 3],
}

pub fn map_bench_rows(mb: &MapBenchSection, map: &MapSection, seed: u64, reference: bool) -> Result<Vec<BenchRow>, CliError> {
    let gpq = GpqParams::new(mb.gpq.p, mb.gpq.q)?;
    let inst_state = RngState::new(seed, STREAM_BENCH);
    let map_state = RngState::new(seed, STREAM_MAP);
    let rows = par_map(mb.n_instances, reference, |i| -> Result<BenchRow, CliError> {
        let inst = sparse_instance(mb.n, mb.m, mb.k, mb.sigma, &mut inst_state.substream(i as u64).rng())?;
        let mc = map_config(map, map_state.substream(i as u64).seed);
        let rp = map_lp(&inst.a, &inst.y, inst.sigma, mb.p, &mc)?;
        let r1 = map_lp(&inst.a, &inst.y, inst.sigma, 1.0, &mc)?;
        let rg = map_gpq_eps(&inst.a, &inst.y, inst.sigma, gpq, map.epsilon, &mc)?;
        let off: Vec<f64> = rg
            .z
            .iter()
            .zip(&inst.truth)
            .filter(|(_, t)| **t == 0.0)
            .map(|(z, _)| *z)
            .collect();
        let small = off.iter().filter(|z| z.abs() < 10.0 * map.epsilon).count();
        Ok(BenchRow {
            f1_p: support_f1(&rp.z, &inst.truth, mb.f1_threshold),
            f1_l1: support_f1(&r1.z, &inst.truth, mb.f1_threshold),
            f1_gpq: support_f1(&rg.z, &inst.truth, mb.f1_threshold),
            off_support_small: if off.is_empty() { 1.0 } else { small as f64 / off.len() as f64 },
            iterations: [rp.iterations, r1.iterations, rg.iterations],
        })
    });
    rows.into_iter().collect()
}

fn run_map_bench(cfg: &ExperimentConfig, run: &mut RunDir, reference: bool) -> Result<Value, CliError> {
    let mb = cfg.map_bench.as_ref().expect("map_bench section resolved by defaults");
    let map = cfg.map.as_ref().expect("map section resolved by defaults");
    let rows = map_bench_rows(mb, map, cfg.seed, reference)?;
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                Cell::from(i),
                Cell::Float(r.f1_p),
                Cell::Float(r.f1_l1),
                Cell::Float(r.f1_gpq),
                Cell::Float(r.off_support_small),
                Cell::from(r.iterations[0]),
                Cell::from(r.iterations[1]),
                Cell::from(r.iterations[2]),
            ]
        })
        .collect();
    run.write_csv(
        "map_bench.csv",
        &["instance", "f1_p", "f1_l1", "f1_gpq", "off_support_small", "iter_p", "iter_l1", "iter_gpq"],
        &cells,
    )?;
    let n = rows.len() as f64;
    let p_wins = rows.iter().filter(|r| r.f1_p >= r.f1_l1).count();
    let eps_ok = rows.iter().filter(|r| r.off_support_small >= 0.9).count();
    Ok(json!({
        "n_instances": rows.len(),
        "p": mb.p,
        "fraction_f1_p_ge_l1": p_wins as f64 / n,
        "fraction_off_support_small_ge_0.9": eps_ok as f64 / n,
        "mean_f1_p": rows.iter().map(|r| r.f1_p).sum::<f64>() / n,
        "mean_f1_l1": rows.iter().map(|r| r.f1_l1).sum::<f64>() / n,
        "mean_f1_gpq": rows.iter().map(|r| r.f1_gpq).sum::<f64>() / n,
    }))
}
