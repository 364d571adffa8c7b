//! Coefficient-space Metropolis–Hastings and MAP estimation with `ℓ_p` and
//! log-smoothed `G_{p,q}` penalties.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bayes_core::{half_sq_dist, PosteriorProblem, PriorDraw, PriorModel};
use crate::distributions::GpqParams;
use crate::levy_process::resample_window;
use crate::error::{invalid, Error, Result};
use crate::product_prior::CoefficientLaw;
use crate::rng::RngState;
use crate::stats::{effective_sample_size, quantile_sorted, sorted};

pub const TARGET_ACCEPTANCE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    /// Total sweeps, burn-in included.
    pub n_steps: usize,
    pub burn_in: usize,
    /// Initial random-walk scale as a multiple of `γ_k`.
    pub proposal_scale: f64,
    pub adapt: bool,
    pub thin: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_steps: 10_000,
            burn_in: 1_000,
            proposal_scale: 1.0,
            adapt: true,
            thin: 1,
            seed: 0,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_steps {
            return Err(invalid("burn_in", "must be smaller than n_steps"));
        }
        if !(self.proposal_scale > 0.0) || !self.proposal_scale.is_finite() {
            return Err(invalid("proposal_scale", "must be positive"));
        }
        if self.thin == 0 {
            return Err(invalid("thin", "must be at least 1"));
        }
        Ok(())
    }
}

/// What the stored chain states represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainState {
    Coefficients,
    GridValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Proposal {
    RandomWalk,
    /// Componentwise fresh prior draws.
    PriorComponent,
    /// Fresh prior draws of the jumps in one time window at a time.
    PriorPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub state: ChainState,
    pub proposal: Proposal,
    /// Post-burn-in states, thinned.
    pub samples: Vec<Vec<f64>>,
    /// `Φ` at each stored state.
    pub potentials: Vec<f64>,
    /// Post-burn-in acceptance rate.
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: f64,
    /// Final random-walk scales (empty for prior proposals).
    pub scales: Vec<f64>,
}

/// Metropolis–Hastings for the discretized posterior.
///
/// `G_{p,q}` coefficient laws use componentwise random walks with scales
/// `∝ γ_k`; compound Poisson coefficients use componentwise prior proposals,
/// and jump-process priors redraw the jumps of one time window at a time
/// from the prior. Both reduce the acceptance ratio to the likelihood ratio.
pub fn mh_sample(problem: &PosteriorProblem, config: &McmcConfig) -> Result<Chain> {
    config.validate()?;
    let mut rng = RngState::from_seed(config.seed).rng();
    match &problem.prior {
        PriorModel::Product(spec) => match spec.law {
            CoefficientLaw::Gpq(g) => random_walk(problem, g, config, &mut rng),
            CoefficientLaw::CompoundPoissonLaplace { .. } => prior_componentwise(problem, config, &mut rng),
        },
        PriorModel::JumpProcess { .. } => prior_path(problem, config, &mut rng),
    }
}

struct Tracker {
    accepted: usize,
    proposed: usize,
    burn_accepted: usize,
    burn_proposed: usize,
}

impl Tracker {
    fn new() -> Self {
        Self {
            accepted: 0,
            proposed: 0,
            burn_accepted: 0,
            burn_proposed: 0,
        }
    }

    fn record(&mut self, burning: bool, accepted: bool) {
        if burning {
            self.burn_proposed += 1;
            self.burn_accepted += accepted as usize;
        } else {
            self.proposed += 1;
            self.accepted += accepted as usize;
        }
    }

    fn check_burn_in(&self, burn_in: usize) -> Result<()> {
        if self.burn_proposed > 0 && self.burn_accepted == 0 {
            return Err(Error::NoAcceptance { burn_in });
        }
        Ok(())
    }

    fn rates(&self) -> (f64, f64) {
        let r = |a: usize, p: usize| if p == 0 { 0.0 } else { a as f64 / p as f64 };
        (r(self.accepted, self.proposed), r(self.burn_accepted, self.burn_proposed))
    }
}

fn log_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

fn random_walk<R: Rng + ?Sized>(
    problem: &PosteriorProblem,
    law: GpqParams,
    config: &McmcConfig,
    rng: &mut R,
) -> Result<Chain> {
    let op = problem.compile()?;
    let gammas = match &problem.prior {
        PriorModel::Product(spec) => spec.weights.values()[..problem.truncation].to_vec(),
        PriorModel::JumpProcess { .. } => unreachable!(),
    };
    let y = &problem.data;
    let n = problem.truncation;
    let mut c = match problem.draw_prior(rng)? {
        PriorDraw::Coefficients(c) => c,
        PriorDraw::Path(_) => unreachable!(),
    };
    let log_prior = |k: usize, v: f64| law.log_pdf_unchecked(v / gammas[k]);
    let potential_of = |inner: &[f64]| {
        let r: Vec<f64> = op.finish(inner.to_vec()).iter().zip(y).map(|(a, b)| a - b).collect();
        let w = op.noise.whiten(&r);
        0.5 * w.iter().map(|v| v * v).sum::<f64>()
    };
    let mut log_scale: Vec<f64> = gammas.iter().map(|g| (config.proposal_scale * g).ln()).collect();
    let mut inner = op.inner_product(&c);
    let mut phi = potential_of(&inner);
    let mut cand = inner.clone();
    let mut tr = Tracker::new();
    let mut out = Vec::new();
    let mut pots = Vec::new();
    for step in 0..config.n_steps {
        let burning = step < config.burn_in;
        for k in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            let prop = c[k] + log_scale[k].exp() * z;
            let d = prop - c[k];
            for ((o, i), b) in cand.iter_mut().zip(&inner).zip(op.inner.column(k).iter()) {
                *o = i + d * b;
            }
            let phi_new = potential_of(&cand);
            let lr = (phi - phi_new) + log_prior(k, prop) - log_prior(k, c[k]);
            let acc = lr.is_finite() && log_accept(lr, rng) || lr == f64::INFINITY;
            if acc {
                c[k] = prop;
                inner.copy_from_slice(&cand);
                phi = phi_new;
            }
            tr.record(burning, acc);
            if burning && config.adapt {
                let eta = 1.0 / ((step + 1) as f64).powf(0.6);
                log_scale[k] += eta * (acc as u8 as f64 - TARGET_ACCEPTANCE);
            }
        }
        // Refresh the running pre-image to keep rounding drift bounded.
        inner = op.inner_product(&c);
        phi = potential_of(&inner);
        if step + 1 == config.burn_in {
            tr.check_burn_in(config.burn_in)?;
        }
        if !burning && (step - config.burn_in) % config.thin == 0 {
            out.push(c.clone());
            pots.push(phi);
        }
    }
    let (rate, burn_rate) = tr.rates();
    Ok(Chain {
        state: ChainState::Coefficients,
        proposal: Proposal::RandomWalk,
        samples: out,
        potentials: pots,
        acceptance_rate: rate,
        burn_in_acceptance_rate: burn_rate,
        scales: log_scale.iter().map(|v| v.exp()).collect(),
    })
}

fn prior_componentwise<R: Rng + ?Sized>(problem: &PosteriorProblem, config: &McmcConfig, rng: &mut R) -> Result<Chain> {
    let op = problem.compile()?;
    let spec = match &problem.prior {
        PriorModel::Product(spec) => spec,
        PriorModel::JumpProcess { .. } => unreachable!(),
    };
    let y = &problem.data;
    let n = problem.truncation;
    let mut c = match problem.draw_prior(rng)? {
        PriorDraw::Coefficients(c) => c,
        PriorDraw::Path(_) => unreachable!(),
    };
    let y_white = op.noise.whiten(y);
    let potential_of = |inner: &[f64]| half_sq_dist(&op.noise.whiten(&op.finish(inner.to_vec())), &y_white);
    let mut inner = op.inner_product(&c);
    let mut phi = potential_of(&inner);
    let mut cand = inner.clone();
    let mut tr = Tracker::new();
    let mut out = Vec::new();
    let mut pots = Vec::new();
    for step in 0..config.n_steps {
        let burning = step < config.burn_in;
        for k in 0..n {
            let prop = spec.weights.values()[k] * spec.law.draw(rng);
            let d = prop - c[k];
            for ((o, i), b) in cand.iter_mut().zip(&inner).zip(op.inner.column(k).iter()) {
                *o = i + d * b;
            }
            let phi_new = potential_of(&cand);
            let acc = log_accept(phi - phi_new, rng);
            if acc {
                c[k] = prop;
                inner.copy_from_slice(&cand);
                phi = phi_new;
            }
            tr.record(burning, acc);
        }
        inner = op.inner_product(&c);
        phi = potential_of(&inner);
        if step + 1 == config.burn_in {
            tr.check_burn_in(config.burn_in)?;
        }
        if !burning && (step - config.burn_in) % config.thin == 0 {
            out.push(c.clone());
            pots.push(phi);
        }
    }
    let (rate, burn_rate) = tr.rates();
    Ok(Chain {
        state: ChainState::Coefficients,
        proposal: Proposal::PriorComponent,
        samples: out,
        potentials: pots,
        acceptance_rate: rate,
        burn_in_acceptance_rate: burn_rate,
        scales: Vec::new(),
    })
}

/// Number of windows a sweep of [`Proposal::PriorPath`] cycles through:
/// about one expected jump per window.
pub fn path_windows(rate: f64) -> usize {
    (rate.ceil() as usize).clamp(1, 64)
}

fn prior_path<R: Rng + ?Sized>(problem: &PosteriorProblem, config: &McmcConfig, rng: &mut R) -> Result<Chain> {
    let (rate, law) = match &problem.prior {
        PriorModel::JumpProcess { rate, law } => (*rate, *law),
        PriorModel::Product(_) => unreachable!(),
    };
    let mut path = match problem.draw_prior(rng)? {
        PriorDraw::Path(p) => p,
        PriorDraw::Coefficients(_) => unreachable!(),
    };
    let n_grid = problem.grid_size;
    let mut u = path.rasterize(n_grid);
    let mut phi = problem.gaussian_potential(&u)?;
    let k = path_windows(rate);
    let mut tr = Tracker::new();
    let mut out = Vec::new();
    let mut pots = Vec::new();
    for step in 0..config.n_steps {
        let burning = step < config.burn_in;
        for w in 0..k {
            let (a, b) = (w as f64 / k as f64, (w + 1) as f64 / k as f64);
            let cand = resample_window(&path, a, b, rate, &law, rng)?;
            let cu = cand.rasterize(n_grid);
            let phi_new = problem.gaussian_potential(&cu)?;
            let acc = log_accept(phi - phi_new, rng);
            if acc {
                path = cand;
                u = cu;
                phi = phi_new;
            }
            tr.record(burning, acc);
        }
        if step + 1 == config.burn_in {
            tr.check_burn_in(config.burn_in)?;
        }
        if !burning && (step - config.burn_in) % config.thin == 0 {
            out.push(u.values().to_vec());
            pots.push(phi);
        }
    }
    let (rate, burn_rate) = tr.rates();
    Ok(Chain {
        state: ChainState::GridValues,
        proposal: Proposal::PriorPath,
        samples: out,
        potentials: pots,
        acceptance_rate: rate,
        burn_in_acceptance_rate: burn_rate,
        scales: Vec::new(),
    })
}

/// Componentwise posterior mean, quantiles and effective sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummaries {
    pub mean: Vec<f64>,
    pub probs: Vec<f64>,
    /// `quantiles[i][k]` is quantile `probs[i]` of coordinate `k`.
    pub quantiles: Vec<Vec<f64>>,
    pub ess: Vec<f64>,
}

pub fn posterior_summaries(samples: &[Vec<f64>], probs: &[f64]) -> Result<PosteriorSummaries> {
    let first = samples.first().ok_or_else(|| invalid("chain", "no samples"))?;
    let d = first.len();
    if samples.iter().any(|s| s.len() != d) {
        return Err(invalid("chain", "states have different lengths"));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(invalid("probs", format!("{p} is outside [0, 1]")));
    }
    let n = samples.len() as f64;
    let mut mean = vec![0.0; d];
    let mut quantiles = vec![vec![0.0; d]; probs.len()];
    let mut ess = vec![0.0; d];
    for k in 0..d {
        let col: Vec<f64> = samples.iter().map(|s| s[k]).collect();
        mean[k] = col.iter().sum::<f64>() / n;
        let s = sorted(&col);
        for (i, &p) in probs.iter().enumerate() {
            quantiles[i][k] = quantile_sorted(&s, p);
        }
        ess[k] = effective_sample_size(&col);
    }
    Ok(PosteriorSummaries {
        mean,
        probs: probs.to_vec(),
        quantiles,
        ess,
    })
}

/// Weight floor `δ` in `(z² + δ²)^{p/2}`.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    pub max_iter: usize,
    /// Stop when `max |Δz| ≤ tol · max(1, ‖z‖_∞)`.
    pub tol: f64,
    /// Starts used for nonconvex penalties: zero, least squares, the `ℓ₁`
    /// solution, then random sparse starts up to this count.
    pub n_starts: usize,
    pub weight_floor: f64,
    pub seed: u64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-10,
            n_starts: 8,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartKind {
    Zero,
    LeastSquares,
    /// The `ℓ₁`-penalized solution.
    L1,
    RandomSparse(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub z: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start: StartKind,
    /// Objective after each iteration of the winning start, starting value first.
    pub trace: Vec<f64>,
    /// Largest per-iteration objective increase seen across all starts (0 if monotone).
    pub max_increase: f64,
}

/// Penalty `Σ [c_p (z²+δ²)^{p/2} + L log(ε + (z²+δ²)^{1/2})]`.
#[derive(Debug, Clone, Copy)]
struct Penalty {
    coef: f64,
    p: f64,
    log_coef: f64,
    eps: f64,
    delta: f64,
}

impl Penalty {
    fn value(&self, z: &[f64]) -> f64 {
        z.iter()
            .map(|&v| {
                let s = v * v + self.delta * self.delta;
                let mut out = self.coef * s.powf(0.5 * self.p);
                if self.log_coef != 0.0 {
                    out += self.log_coef * (self.eps + s.sqrt()).ln();
                }
                out
            })
            .sum()
    }

    /// Slope of the penalty as a function of `z²` at `v`.
    fn weight(&self, v: f64) -> f64 {
        let s = v * v + self.delta * self.delta;
        let mut w = self.coef * 0.5 * self.p * s.powf(0.5 * self.p - 1.0);
        if self.log_coef != 0.0 {
            let r = s.sqrt();
            w += self.log_coef / (2.0 * r * (self.eps + r));
        }
        w
    }
}

struct Lsq<'a> {
    a: &'a DMatrix<f64>,
    y: DVector<f64>,
    sigma2: f64,
}

impl Lsq<'_> {
    fn data_term(&self, z: &[f64]) -> f64 {
        let r = self.a * DVector::from_column_slice(z) - &self.y;
        0.5 * r.norm_squared() / self.sigma2
    }

    /// `z = D Aᵀ (σ² I + A D Aᵀ)⁻¹ y`.
    fn solve(&self, d: &[f64]) -> Result<Vec<f64>> {
        let m = self.a.nrows();
        let mut ad = self.a.clone();
        for (j, &dj) in d.iter().enumerate() {
            ad.column_mut(j).scale_mut(dj);
        }
        let mut k = &ad * self.a.transpose();
        for i in 0..m {
            k[(i, i)] += self.sigma2;
        }
        let chol = nalgebra::linalg::Cholesky::new(k).ok_or(Error::Factorization { jitter: 0.0 })?;
        let v = chol.solve(&self.y);
        Ok((ad.transpose() * v).iter().copied().collect())
    }
}

struct Run {
    z: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
    max_increase: f64,
}

fn mm_iterate(lsq: &Lsq, pen: &Penalty, z0: Vec<f64>, config: &MapConfig) -> Result<Run> {
    let obj = |z: &[f64]| lsq.data_term(z) + pen.value(z);
    let mut z = z0;
    let mut f = obj(&z);
    let mut trace = vec![f];
    let mut max_increase: f64 = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..config.max_iter {
        iterations += 1;
        let d: Vec<f64> = z.iter().map(|&v| 0.5 / pen.weight(v)).collect();
        let z_new = lsq.solve(&d)?;
        let f_new = obj(&z_new);
        if !f_new.is_finite() {
            break;
        }
        max_increase = max_increase.max(f_new - f);
        let step = z.iter().zip(&z_new).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = z_new.iter().map(|v| v.abs()).fold(1.0, f64::max);
        z = z_new;
        f = f_new;
        trace.push(f);
        if step <= config.tol * scale {
            converged = true;
            break;
        }
    }
    Ok(Run {
        z,
        objective: f,
        iterations,
        converged,
        trace,
        max_increase,
    })
}

fn check_design(a: &DMatrix<f64>, y: &[f64], sigma: f64, config: &MapConfig) -> Result<()> {
    if a.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: y.len(),
        });
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", "must be positive"));
    }
    if !(config.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    if !(config.weight_floor > 0.0) {
        return Err(invalid("weight_floor", "must be positive"));
    }
    Ok(())
}

fn solve_penalized(a: &DMatrix<f64>, y: &[f64], sigma: f64, pen: Penalty, convex: bool, config: &MapConfig) -> Result<MapResult> {
    let lsq = Lsq {
        a,
        y: DVector::from_column_slice(y),
        sigma2: sigma * sigma,
    };
    let n = a.ncols();
    let ls = lsq.solve(&vec![1.0; n])?;
    let mut starts = vec![(StartKind::LeastSquares, ls)];
    if !convex {
        starts.insert(0, (StartKind::Zero, vec![0.0; n]));
        let l1 = Penalty {
            coef: pen.coef,
            p: 1.0,
            log_coef: 0.0,
            eps: 0.0,
            delta: pen.delta,
        };
        let z1 = mm_iterate(&lsq, &l1, starts[1].1.clone(), config)?.z;
        starts.push((StartKind::L1, z1));
        let mut rng = RngState::new(config.seed, 1).rng();
        let support = (a.nrows() / 2).clamp(1, n);
        for s in 0..config.n_starts.saturating_sub(3) {
            let idx = sample_indices(&mut rng, n, support);
            let mut d = vec![0.0; n];
            for i in idx.iter() {
                d[i] = 1.0;
            }
            starts.push((StartKind::RandomSparse(s), lsq.solve(&d)?));
        }
    }
    let mut best: Option<(StartKind, Run)> = None;
    let mut max_increase: f64 = 0.0;
    for (kind, z0) in starts {
        let run = mm_iterate(&lsq, &pen, z0, config)?;
        max_increase = max_increase.max(run.max_increase);
        if best.as_ref().is_none_or(|(_, b)| run.objective < b.objective) {
            best = Some((kind, run));
        }
    }
    let (start, run) = best.expect("at least one start");
    Ok(MapResult {
        z: run.z,
        objective: run.objective,
        iterations: run.iterations,
        converged: run.converged,
        start,
        trace: run.trace,
        max_increase,
    })
}

/// Minimizer of `½σ⁻²‖Az − y‖² + ‖z‖_p^p` by majorize–minimize reweighting.
///
/// For `p < 1` the best of several starts is returned; there is no global
/// optimality guarantee.
pub fn map_lp(a: &DMatrix<f64>, y: &[f64], sigma: f64, p: f64, config: &MapConfig) -> Result<MapResult> {
    check_design(a, y, sigma, config)?;
    if !(p > 0.0 && p <= 2.0) {
        return Err(invalid("p", format!("must lie in (0, 2], got {p}")));
    }
    let pen = Penalty {
        coef: 1.0,
        p,
        log_coef: 0.0,
        eps: 0.0,
        delta: config.weight_floor,
    };
    solve_penalized(a, y, sigma, pen, p >= 1.0, config)
}

/// Minimizer of `½σ⁻²‖Az − y‖² + Σ|z_k/α|^p + (1−q) Σ log(ε + |z_k|)`.
pub fn map_gpq_eps(
    a: &DMatrix<f64>,
    y: &[f64],
    sigma: f64,
    params: GpqParams,
    eps: f64,
    config: &MapConfig,
) -> Result<MapResult> {
    check_design(a, y, sigma, config)?;
    let (p, q) = (params.p(), params.q());
    if p > 2.0 {
        return Err(invalid("p", format!("must not exceed 2, got {p}")));
    }
    if q > 1.0 {
        return Err(invalid("q", format!("must not exceed 1, got {q}")));
    }
    if q < 1.0 && !(eps > 0.0) {
        return Err(invalid("epsilon", "must be positive when q < 1"));
    }
    let pen = Penalty {
        coef: params.alpha().powf(-p),
        p,
        log_coef: 1.0 - q,
        eps,
        delta: config.weight_floor,
    };
    solve_penalized(a, y, sigma, pen, p >= 1.0 && q == 1.0, config)
}

/// F1 score of the estimated support `{|z| > threshold}` against the true support.
pub fn support_f1(estimate: &[f64], truth: &[f64], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (e, t) in estimate.iter().zip(truth) {
        match (e.abs() > threshold, *t != 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return if fp == 0 && fneg == 0 { 1.0 } else { 0.0 };
    }
    2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
}

/// Compressed-sensing test instance `y = A x + σ η`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseInstance {
    pub a: DMatrix<f64>,
    pub truth: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: f64,
}

/// `A` has i.i.d. `N(0, 1/m)` entries; the `k` nonzero entries of `x` are
/// standard normal on a uniformly random support.
pub fn sparse_instance<R: Rng + ?Sized>(n: usize, m: usize, k: usize, sigma: f64, rng: &mut R) -> Result<SparseInstance> {
    if k > n || m == 0 {
        return Err(invalid("k", "sparsity must not exceed n and m must be positive"));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let a = DMatrix::from_fn(m, n, |_, _| {
        let g: f64 = StandardNormal.sample(&mut *rng);
        scale * g
    });
    let mut truth = vec![0.0; n];
    for i in sample_indices(rng, n, k).iter() {
        truth[i] = StandardNormal.sample(&mut *rng);
    }
    let clean = &a * DVector::from_column_slice(&truth);
    let y = clean
        .iter()
        .map(|v| {
            let g: f64 = StandardNormal.sample(&mut *rng);
            v + sigma * g
        })
        .collect();
    Ok(SparseInstance { a, truth, y, sigma })
}
