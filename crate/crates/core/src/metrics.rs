//! Importance-sampling estimates of Hellinger and total-variation distances
//! between posteriors that share a prior, and the experiments built on them.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::bayes_core::{half_sq_dist, DrawBank, PosteriorProblem, PriorDraw, PriorModel, BOOTSTRAP_RESAMPLES};
use crate::error::{invalid, Error, Result};
use crate::rng::RngState;
use crate::special::log_sum_exp;
use crate::stats::{variance, weighted_slope, Estimate};

/// Minimum `(Σw)²/Σw²` for either weight set.
pub const MIN_ESS: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    pub hellinger: Estimate,
    pub tv: Estimate,
    pub n_samples: usize,
    pub n_boot: usize,
    pub ess_a: f64,
    pub ess_b: f64,
}

impl DistanceReport {
    /// `2 d_H² ≤ d_TV ≤ √8 d_H`, each side allowed `k` combined standard errors.
    pub fn tv_hellinger_bounds_hold(&self, k: f64) -> (bool, bool) {
        let (h, hs) = (self.hellinger.value, self.hellinger.se);
        let (t, ts) = (self.tv.value, self.tv.se);
        let lower_se = (4.0 * h * hs).hypot(ts);
        let upper_se = ts.hypot(8f64.sqrt() * hs);
        (
            2.0 * h * h <= t + k * lower_se,
            t <= 8f64.sqrt() * h + k * upper_se,
        )
    }
}

/// Importance weights normalized to mean one, in log space first.
struct Weights {
    /// `exp(−Φ_i − max(−Φ))`.
    raw: Vec<f64>,
    /// `raw_i / mean(raw)`.
    norm: Vec<f64>,
    ess: f64,
}

impl Weights {
    fn new(phi: &[f64]) -> Result<Self> {
        if phi.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("NaN potential".into()));
        }
        let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
        let n = neg.len() as f64;
        let lse = log_sum_exp(&neg);
        let top = neg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = neg.iter().map(|v| (v - top).exp()).collect();
        let norm: Vec<f64> = neg.iter().map(|v| (v - lse + n.ln()).exp()).collect();
        let s2: f64 = norm.iter().map(|v| v * v).sum();
        Ok(Self {
            raw,
            norm,
            ess: n * n / s2,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct PairStats {
    tv: f64,
    hellinger: f64,
    gap: f64,
    bound: f64,
}

/// Distances and the expectation gap of `h` on the index multiset `idx`.
fn pair_stats(wa: &[f64], wb: &[f64], h: Option<&[f64]>, idx: &[usize]) -> PairStats {
    let n = idx.len() as f64;
    let (sa, sb) = idx.iter().fold((0.0, 0.0), |(x, y), &i| (x + wa[i], y + wb[i]));
    let (ma, mb) = (sa / n, sb / n);
    let (mut tv, mut hs) = (0.0, 0.0);
    let (mut ea, mut eb, mut ea2, mut eb2) = (0.0, 0.0, 0.0, 0.0);
    for &i in idx {
        let a = wa[i] / ma;
        let b = wb[i] / mb;
        tv += (a - b).abs();
        let d = a.sqrt() - b.sqrt();
        hs += d * d;
        if let Some(h) = h {
            let v = h[i];
            ea += a * v;
            eb += b * v;
            ea2 += a * v * v;
            eb2 += b * v * v;
        }
    }
    let hellinger = (0.5 * hs / n).sqrt();
    PairStats {
        tv: 0.5 * tv / n,
        hellinger,
        gap: ((ea - eb) / n).abs(),
        bound: 2.0 * ((ea2 + eb2) / n).sqrt() * hellinger,
    }
}

struct PairEstimate {
    point: PairStats,
    se: PairStats,
    ess_a: f64,
    ess_b: f64,
}

fn estimate_pair<R: Rng + ?Sized>(
    phi_a: &[f64],
    phi_b: &[f64],
    h: Option<&[f64]>,
    n_boot: usize,
    rng: &mut R,
) -> Result<PairEstimate> {
    let n = phi_a.len();
    if n == 0 || phi_b.len() != n || h.is_some_and(|h| h.len() != n) {
        return Err(invalid("potentials", "need equal, non-zero numbers of shared draws"));
    }
    let wa = Weights::new(phi_a)?;
    let wb = Weights::new(phi_b)?;
    if !(wa.ess > MIN_ESS && wb.ess > MIN_ESS) {
        return Err(Error::DegenerateWeights {
            ess_a: wa.ess,
            ess_b: wb.ess,
            min: MIN_ESS,
        });
    }
    let all: Vec<usize> = (0..n).collect();
    let point = pair_stats(&wa.norm, &wb.norm, h, &all);
    let mut reps: [Vec<f64>; 4] = Default::default();
    let mut idx = vec![0usize; n];
    for _ in 0..n_boot {
        for i in idx.iter_mut() {
            *i = rng.random_range(0..n);
        }
        let s = pair_stats(&wa.raw, &wb.raw, h, &idx);
        for (r, v) in reps.iter_mut().zip([s.tv, s.hellinger, s.gap, s.bound]) {
            r.push(v);
        }
    }
    let sd = |v: &[f64]| if v.len() > 1 { variance(v).sqrt() } else { 0.0 };
    Ok(PairEstimate {
        point,
        se: PairStats {
            tv: sd(&reps[0]),
            hellinger: sd(&reps[1]),
            gap: sd(&reps[2]),
            bound: sd(&reps[3]),
        },
        ess_a: wa.ess,
        ess_b: wb.ess,
    })
}

/// Distances between `μ_A ∝ e^{−Φ_A} μ₀` and `μ_B ∝ e^{−Φ_B} μ₀` from shared
/// prior draws, with bootstrap standard errors.
pub fn distance_from_potentials<R: Rng + ?Sized>(
    phi_a: &[f64],
    phi_b: &[f64],
    n_boot: usize,
    rng: &mut R,
) -> Result<DistanceReport> {
    let e = estimate_pair(phi_a, phi_b, None, n_boot, rng)?;
    Ok(DistanceReport {
        hellinger: Estimate {
            value: e.point.hellinger,
            se: e.se.hellinger,
        },
        tv: Estimate {
            value: e.point.tv,
            se: e.se.tv,
        },
        n_samples: phi_a.len(),
        n_boot,
        ess_a: e.ess_a,
        ess_b: e.ess_b,
    })
}

fn check_pair(a: &PosteriorProblem, b: &PosteriorProblem) -> Result<()> {
    if a.prior != b.prior || a.forward != b.forward || a.noise != b.noise || a.grid_size != b.grid_size || a.truncation != b.truncation {
        return Err(invalid("problems", "the two posteriors must differ in their data only"));
    }
    Ok(())
}

/// Distance between two posteriors that differ only in their data.
pub fn distance_estimate(a: &PosteriorProblem, b: &PosteriorProblem, n_samples: usize, state: &RngState) -> Result<DistanceReport> {
    check_pair(a, b)?;
    let bank = a.draw_bank(n_samples, state)?;
    let pa = bank.potentials(&a.whitened_data());
    let pb = bank.potentials(&b.whitened_data());
    let mut rng = state.substream(u64::MAX).rng();
    distance_from_potentials(&pa, &pb, BOOTSTRAP_RESAMPLES, &mut rng)
}

/// One row of a distance table: `delta_or_N, d_H, d_H_se, d_TV, d_TV_se, ess_A, ess_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRow {
    pub key: f64,
    pub report: DistanceReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// The first row is `δ = 0`.
    pub rows: Vec<DistanceRow>,
    /// Weighted log-log slope of `d_H` against `δ` over the positive deltas.
    pub slope_hellinger: f64,
    pub slope_tv: f64,
}

fn log_slope(rows: &[DistanceRow], x: impl Fn(&DistanceRow) -> f64, pick: impl Fn(&DistanceReport) -> Estimate) -> f64 {
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for r in rows {
        let e = pick(&r.report);
        let xv = x(r);
        if e.value > 0.0 && xv > 0.0 {
            xs.push(xv.ln());
            ys.push(e.value.ln());
            let rel = e.se / e.value;
            ws.push(if rel > 0.0 { 1.0 / (rel * rel) } else { 1.0 });
        }
    }
    if xs.len() < 2 {
        return f64::NAN;
    }
    weighted_slope(&xs, &ys, &ws)
}

/// Perturbs the data along the unit vector `direction / ‖direction‖` by each
/// delta, reusing one set of prior draws for every row.
pub fn stability_from_bank(
    problem: &PosteriorProblem,
    bank: &DrawBank,
    direction: &[f64],
    deltas: &[f64],
    n_boot: usize,
    state: &RngState,
) -> Result<StabilityReport> {
    if direction.len() != problem.n_obs() {
        return Err(Error::DimensionMismatch {
            expected: problem.n_obs(),
            got: direction.len(),
        });
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(invalid("direction", "must be non-zero"));
    }
    if deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(invalid("deltas", "must be positive"));
    }
    let base = bank.potentials(&problem.whitened_data());
    let mut rows = Vec::with_capacity(deltas.len() + 1);
    for (i, &delta) in core::iter::once(&0.0).chain(deltas).enumerate() {
        let y: Vec<f64> = problem
            .data
            .iter()
            .zip(direction)
            .map(|(y, e)| y + delta * e / norm)
            .collect();
        let phi = bank.potentials(&problem.noise.whiten(&y));
        let mut rng = state.substream(i as u64).rng();
        rows.push(DistanceRow {
            key: delta,
            report: distance_from_potentials(&base, &phi, n_boot, &mut rng)?,
        });
    }
    Ok(StabilityReport {
        slope_hellinger: log_slope(&rows, |r| r.key, |d| d.hellinger),
        slope_tv: log_slope(&rows, |r| r.key, |d| d.tv),
        rows,
    })
}

pub fn stability_experiment(
    problem: &PosteriorProblem,
    direction: &[f64],
    deltas: &[f64],
    n_samples: usize,
    state: &RngState,
) -> Result<StabilityReport> {
    let bank = problem.draw_bank(n_samples, &state.substream(0))?;
    stability_from_bank(problem, &bank, direction, deltas, BOOTSTRAP_RESAMPLES, &state.substream(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRow {
    pub n: usize,
    pub report: DistanceReport,
    /// `Σ_{k>N} γ_k²`.
    pub tail_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// Rows in the order of the requested `N` list.
    pub rows: Vec<ConsistencyRow>,
    /// Every consecutive pair decreases or overlaps within one standard error each.
    pub monotone_up_to_se: bool,
    /// Weighted log-log slope of `d_H` against the tail energy, over `N` below the truncation.
    pub slope_vs_tail: f64,
}

/// Potentials `Φ_N` of one prior draw at each checkpoint `N`, accumulated
/// term by term so that equal `N` give bit-identical values.
pub fn projected_potentials_for_draw(
    problem: &PosteriorProblem,
    op: &crate::bayes_core::CompiledOperator,
    checkpoints: &[usize],
    y_white: &[f64],
    state: &RngState,
) -> Result<Vec<f64>> {
    let mut rng = state.rng();
    let c = match problem.draw_prior(&mut rng)? {
        PriorDraw::Coefficients(c) => c,
        PriorDraw::Path(_) => return Err(Error::Unsupported("projection of a jump-process prior".into())),
    };
    Ok(op
        .prefix_predictions(&c, checkpoints)
        .iter()
        .map(|p| half_sq_dist(p, y_white))
        .collect())
}

fn consistency_checkpoints(problem: &PosteriorProblem, n_list: &[usize]) -> Result<Vec<usize>> {
    if n_list.is_empty() {
        return Err(invalid("n_list", "must not be empty"));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n_list", "must be strictly increasing"));
    }
    if n_list[n_list.len() - 1] > problem.truncation {
        return Err(invalid("n_list", "entries must not exceed the prior truncation"));
    }
    let mut cps = n_list.to_vec();
    if cps[cps.len() - 1] != problem.truncation {
        cps.push(problem.truncation);
    }
    Ok(cps)
}

/// Distances between the posterior and its projected-potential
/// approximations, given `phi[i][j] = Φ_{checkpoint j}(u_i)`.
pub fn consistency_from_potentials(
    problem: &PosteriorProblem,
    n_list: &[usize],
    phi: &[Vec<f64>],
    n_boot: usize,
    state: &RngState,
) -> Result<ConsistencyReport> {
    let cps = consistency_checkpoints(problem, n_list)?;
    let spec = match &problem.prior {
        PriorModel::Product(spec) => spec,
        PriorModel::JumpProcess { .. } => return Err(Error::Unsupported("projection of a jump-process prior".into())),
    };
    let full: Vec<f64> = phi.iter().map(|r| r[cps.len() - 1]).collect();
    let mut rows = Vec::with_capacity(n_list.len());
    for (j, &n) in n_list.iter().enumerate() {
        let phi_n: Vec<f64> = phi.iter().map(|r| r[j]).collect();
        let mut rng = state.substream(j as u64).rng();
        rows.push(ConsistencyRow {
            n,
            report: distance_from_potentials(&full, &phi_n, n_boot, &mut rng)?,
            tail_energy: spec.weights.tail_energy_after(n),
        });
    }
    let monotone_up_to_se = rows.windows(2).all(|w| {
        let (a, b) = (&w[0].report.hellinger, &w[1].report.hellinger);
        b.value < a.value || b.value - a.value <= a.se + b.se
    });
    let below: Vec<DistanceRow> = rows
        .iter()
        .filter(|r| r.n < problem.truncation)
        .map(|r| DistanceRow {
            key: r.tail_energy,
            report: r.report.clone(),
        })
        .collect();
    Ok(ConsistencyReport {
        slope_vs_tail: log_slope(&below, |r| r.key, |d| d.hellinger),
        monotone_up_to_se,
        rows,
    })
}

pub fn consistency_experiment(
    problem: &PosteriorProblem,
    n_list: &[usize],
    n_samples: usize,
    state: &RngState,
) -> Result<ConsistencyReport> {
    let cps = consistency_checkpoints(problem, n_list)?;
    let op = problem.compile()?;
    let y_white = problem.whitened_data();
    let draws = state.substream(0);
    let phi = (0..n_samples)
        .map(|i| projected_potentials_for_draw(problem, &op, &cps, &y_white, &draws.substream(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    consistency_from_potentials(problem, n_list, &phi, BOOTSTRAP_RESAMPLES, &state.substream(1))
}

/// `|E_A h − E_B h|` against `2 (E_A h² + E_B h²)^{1/2} d_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationGapReport {
    pub gap: Estimate,
    pub bound: Estimate,
    pub hellinger: f64,
    /// `gap ≤ bound` up to four combined standard errors.
    pub holds: bool,
}

pub fn expectation_gap_from_potentials<R: Rng + ?Sized>(
    phi_a: &[f64],
    phi_b: &[f64],
    h: &[f64],
    n_boot: usize,
    rng: &mut R,
) -> Result<ExpectationGapReport> {
    let e = estimate_pair(phi_a, phi_b, Some(h), n_boot, rng)?;
    let slack = 4.0 * e.se.gap.hypot(e.se.bound);
    Ok(ExpectationGapReport {
        gap: Estimate {
            value: e.point.gap,
            se: e.se.gap,
        },
        bound: Estimate {
            value: e.point.bound,
            se: e.se.bound,
        },
        hellinger: e.point.hellinger,
        holds: e.point.gap <= e.point.bound + slack,
    })
}

/// Expectation-gap check with `h(u) = ‖u‖²_{L²}`.
pub fn expectation_gap_check(a: &PosteriorProblem, b: &PosteriorProblem, n_samples: usize, state: &RngState) -> Result<ExpectationGapReport> {
    check_pair(a, b)?;
    let bank = a.draw_bank(n_samples, state)?;
    let pa = bank.potentials(&a.whitened_data());
    let pb = bank.potentials(&b.whitened_data());
    let mut rng = state.substream(u64::MAX).rng();
    expectation_gap_from_potentials(&pa, &pb, bank.h(), BOOTSTRAP_RESAMPLES, &mut rng)
}
