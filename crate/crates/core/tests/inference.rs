mod common;

use common::*;
use idprior_core::bayes_core::{gaussian_potential, NoiseSpec, PosteriorProblem, PriorDraw, PriorModel};
use idprior_core::distributions::GpqParams;
use idprior_core::error::Error;
use idprior_core::forward_models::{DeconvModel, ForwardModel, QuadModel};
use idprior_core::grid::GridField;
use idprior_core::inference::{
    map_gpq_eps, map_lp, mh_sample, posterior_summaries, sparse_instance, support_f1, ChainState, MapConfig,
    McmcConfig, Proposal,
};
use idprior_core::nalgebra::DMatrix;
use idprior_core::product_prior::{BasisSpec, CoefficientLaw, ProductPriorSpec, WeightRule, WeightSequence};
use idprior_core::rng::RngState;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// `n` coefficients with unit weights behind a zero kernel, so `Φ ≡ 0`.
fn null_problem(n: usize, law: CoefficientLaw) -> PosteriorProblem {
    let spec = ProductPriorSpec::new(
        BasisSpec::fourier(n).unwrap(),
        WeightSequence::new(WeightRule::Explicit(vec![1.0; n]), n).unwrap(),
        law,
    )
    .unwrap();
    let fwd = ForwardModel::Deconv(DeconvModel::new(GridField::zeros(16), vec![0.0]).unwrap());
    PosteriorProblem::new(PriorModel::Product(spec), fwd, NoiseSpec::isotropic(1, 1.0).unwrap(), vec![0.0], 16, n)
        .unwrap()
}

fn mcmc(n_steps: usize, burn_in: usize, seed: u64) -> McmcConfig {
    McmcConfig {
        n_steps,
        burn_in,
        seed,
        ..McmcConfig::default()
    }
}

fn column(samples: &[Vec<f64>], k: usize) -> Vec<f64> {
    samples.iter().map(|s| s[k]).collect()
}

#[test]
fn flat_likelihood_recovers_the_prior() {
    for (i, &(p, q)) in [(1.0, 1.0), (2.0, 2.0), (1.5, 0.75)].iter().enumerate() {
        let prob = null_problem(3, CoefficientLaw::Gpq(GpqParams::new(p, q).unwrap()));
        let chain = mh_sample(&prob, &mcmc(100_000, 2_000, i as u64)).unwrap();
        assert_eq!(chain.state, ChainState::Coefficients);
        assert_eq!(chain.proposal, Proposal::RandomWalk);
        assert_eq!(chain.samples.len(), 98_000);
        assert!(chain.potentials.iter().all(|v| *v == 0.0));
        for k in 0..3 {
            let col = column(&chain.samples, k);
            let d = ks(&col, |t| gpq_cdf(p, q, t));
            assert!(d < 0.05, "({p},{q}) coordinate {k}: KS {d}");
            let sq: Vec<f64> = col.iter().map(|x| x * x).collect();
            let (m, se) = batch_mean_se(&sq, 100);
            assert!((m - 1.0).abs() < 4.0 * se, "({p},{q}) E ξ² = {m} ± {se}");
        }
    }
}

#[test]
fn conjugate_posterior_moments_and_quantiles() {
    for (i, &(gamma, sigma, y)) in [(1.0, 0.5, 0.8), (2.0, 1.0, -1.5)].iter().enumerate() {
        let prob = conjugate_problem(gamma, sigma, y);
        let chain = mh_sample(&prob, &mcmc(200_000, 5_000, 10 + i as u64)).unwrap();
        assert!(chain.acceptance_rate > 0.1 && chain.acceptance_rate < 0.6);
        let (mean, var) = conjugate_posterior(gamma, sigma, y);
        let xs = column(&chain.samples, 0);
        let (m, se) = batch_mean_se(&xs, 100);
        assert!((m - mean).abs() < 4.0 * se, "mean {m} ± {se} vs {mean}");
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        let (v, vse) = batch_mean_se(&sq, 100);
        assert!((v - var).abs() < 4.0 * vse, "var {v} ± {vse} vs {var}");

        let probs = [0.05, 0.25, 0.5, 0.75, 0.95];
        let s = posterior_summaries(&chain.samples, &probs).unwrap();
        assert!((s.mean[0] - m).abs() < 1e-12);
        let ess = var / (se * se);
        let sd = var.sqrt();
        let normal = Normal::new(0.0, 1.0).unwrap();
        for (j, &pr) in probs.iter().enumerate() {
            let z = normal.inverse_cdf(pr);
            let want = mean + sd * z;
            let tol = 4.0 * (pr * (1.0 - pr) / ess).sqrt() * sd / normal.pdf(z);
            assert!((s.quantiles[j][0] - want).abs() < tol, "q{pr}: {} vs {want}", s.quantiles[j][0]);
        }
    }
}

#[test]
fn symmetric_data_gives_zero_mean() {
    let n = 8;
    let spec = ProductPriorSpec::new(
        BasisSpec::haar(n).unwrap(),
        WeightSequence::new(WeightRule::WaveletSobolev, n).unwrap(),
        CoefficientLaw::Gpq(GpqParams::new(1.0, 1.0).unwrap()),
    )
    .unwrap();
    let fwd = ForwardModel::Deconv(DeconvModel::gaussian(64, 0.03, 8).unwrap());
    let prob =
        PosteriorProblem::new(PriorModel::Product(spec), fwd, NoiseSpec::isotropic(8, 0.5).unwrap(), vec![0.0; 8], 64, n)
            .unwrap();
    let chain = mh_sample(&prob, &mcmc(60_000, 2_000, 3)).unwrap();
    for k in 0..n {
        let (m, se) = batch_mean_se(&column(&chain.samples, k), 50);
        assert!(m.abs() < 4.0 * se, "coordinate {k}: {m} ± {se}");
    }
}

#[test]
fn two_mode_histogram_matches_quadrature() {
    // y = (u(0) + u(1/4))², a linear functional squared: two ridges of equal mass.
    let spec = ProductPriorSpec::new(
        BasisSpec::fourier(2).unwrap(),
        WeightSequence::new(WeightRule::Explicit(vec![1.0, 1.0]), 2).unwrap(),
        CoefficientLaw::Gpq(GpqParams::standard_normal()),
    )
    .unwrap();
    let quad = QuadModel::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), vec![0.0, 0.25]).unwrap();
    let prob = PosteriorProblem::new(
        PriorModel::Product(spec),
        ForwardModel::Quadratic(quad),
        NoiseSpec::isotropic(1, 0.5).unwrap(),
        vec![1.0],
        8,
        2,
    )
    .unwrap();

    let (lo, hi, bins) = (-4.0, 4.0, 8usize);
    let bin_of = |x: f64| ((x - lo) / (hi - lo) * bins as f64).floor() as usize;
    let grid = 200usize;
    let h = (hi - lo) / grid as f64;
    let mut exact = vec![0.0; bins * bins];
    for i in 0..grid {
        for j in 0..grid {
            let (a, b) = (lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h);
            let u = prob.field(&PriorDraw::Coefficients(vec![a, b])).unwrap();
            let dens = (-gaussian_potential(&prob, &u).unwrap() - 0.5 * (a * a + b * b)).exp();
            exact[bin_of(a) * bins + bin_of(b)] += dens;
        }
    }
    let total: f64 = exact.iter().sum();
    exact.iter_mut().for_each(|v| *v /= total);

    let chain = mh_sample(&prob, &mcmc(400_000, 5_000, 4)).unwrap();
    let mut hist = vec![0.0; bins * bins];
    let mut kept = 0.0;
    for s in &chain.samples {
        if s.iter().all(|v| (lo..hi).contains(v)) {
            hist[bin_of(s[0]) * bins + bin_of(s[1])] += 1.0;
            kept += 1.0;
        }
    }
    let tv = 0.5 * hist.iter().zip(&exact).map(|(a, b)| (a / kept - b).abs()).sum::<f64>();
    assert!(tv < 0.03, "TV {tv}");
    // Both ridges are visited.
    let pos = chain.samples.iter().filter(|c| c[0] > 0.0).count() as f64 / chain.samples.len() as f64;
    assert!((pos - 0.5).abs() < 0.1, "{pos}");
}

#[test]
fn independence_sampler_gives_iid_draws() {
    let prob = null_problem(4, CoefficientLaw::CompoundPoissonLaplace { rate: 2.0 });
    let chain = mh_sample(&prob, &mcmc(20_000, 100, 5)).unwrap();
    assert_eq!(chain.proposal, Proposal::PriorComponent);
    assert_eq!(chain.acceptance_rate, 1.0);
    let s = posterior_summaries(&chain.samples, &[0.5]).unwrap();
    let n = chain.samples.len() as f64;
    for k in 0..4 {
        assert!((s.ess[k] / n - 1.0).abs() < 0.2, "ESS {} of {n}", s.ess[k]);
    }
}

#[test]
fn summaries_of_a_constant_chain() {
    let chain = vec![vec![2.5, -1.0]; 500];
    let s = posterior_summaries(&chain, &[0.1, 0.9]).unwrap();
    assert_eq!(s.mean, vec![2.5, -1.0]);
    assert_eq!(s.ess, vec![1.0, 1.0]);
    assert_eq!(s.quantiles[1], vec![2.5, -1.0]);
    assert!(posterior_summaries(&[], &[0.5]).is_err());
    assert!(posterior_summaries(&chain, &[1.5]).is_err());
}

#[test]
fn chains_are_reproducible_and_report_dead_burn_in() {
    let prob = conjugate_problem(1.0, 0.5, 0.3);
    let a = mh_sample(&prob, &mcmc(2_000, 100, 9)).unwrap();
    let b = mh_sample(&prob, &mcmc(2_000, 100, 9)).unwrap();
    let c = mh_sample(&prob, &mcmc(2_000, 100, 10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.samples, c.samples);
    let frozen = McmcConfig {
        proposal_scale: 1e200,
        adapt: false,
        ..mcmc(100, 10, 1)
    };
    assert!(matches!(mh_sample(&prob, &frozen), Err(Error::NoAcceptance { .. })));
    assert!(mh_sample(&prob, &mcmc(10, 10, 1)).is_err());
}

fn identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}

fn gauss(n: usize, seed: u64) -> Vec<f64> {
    let mut r = RngState::new(21, seed).rng();
    (0..n).map(|_| 2.0 * r.sample::<f64, _>(StandardNormal)).collect()
}

#[test]
fn map_closed_forms() {
    let cfg = MapConfig::default();
    let y = gauss(20, 1);
    assert!(map_lp(&identity(20), &vec![0.0; 20], 1.0, 0.7, &cfg).unwrap().z.iter().all(|v| *v == 0.0));
    let ridge = map_lp(&identity(20), &y, 1.0, 2.0, &cfg).unwrap();
    assert!(ridge.converged);
    for (z, yi) in ridge.z.iter().zip(&y) {
        assert!((z - yi / 3.0).abs() < 1e-9);
    }
    let l1 = map_lp(&identity(20), &y, 1.0, 1.0, &cfg).unwrap();
    for (z, yi) in l1.z.iter().zip(&y) {
        // Brute-force minimizer of ½(z − y)² + |z| on a fine grid.
        let h = 1e-4;
        let best = (-100_000..=100_000)
            .map(|i| i as f64 * h)
            .min_by(|a, b| {
                let f = |t: f64| 0.5 * (t - yi).powi(2) + t.abs();
                f(*a).partial_cmp(&f(*b)).unwrap()
            })
            .unwrap();
        let soft = yi.signum() * (yi.abs() - 1.0).max(0.0);
        assert!((best - soft).abs() <= h);
        assert!((z - soft).abs() < 1e-6, "{z} vs {soft}");
    }
    assert!(map_lp(&identity(3), &[1.0; 3], 1.0, 2.5, &cfg).is_err());
    assert!(map_lp(&identity(3), &[1.0; 2], 1.0, 1.0, &cfg).is_err());
}

#[test]
fn map_objective_never_increases() {
    let cfg = MapConfig::default();
    for seed in 0..10u64 {
        let mut r = RngState::new(22, seed).rng();
        let inst = sparse_instance(32, 16, 3, 0.05, &mut r).unwrap();
        for p in [0.5, 0.8, 1.0, 1.5] {
            let res = map_lp(&inst.a, &inst.y, inst.sigma, p, &cfg).unwrap();
            let scale = 1.0 + res.trace[0].abs();
            assert!(res.max_increase <= 1e-12 * scale, "p={p}: {}", res.max_increase);
            assert!(res.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * scale));
            assert!((res.trace.last().unwrap() - res.objective).abs() <= 1e-12 * scale);
            // The reported objective is the stated one.
            let z = idprior_core::nalgebra::DVector::from_column_slice(&res.z);
            let r2 = (&inst.a * &z).iter().zip(&inst.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let pen: f64 = res.z.iter().map(|v| (v * v + cfg.weight_floor.powi(2)).powf(p / 2.0)).sum();
            let obj = 0.5 * r2 / inst.sigma.powi(2) + pen;
            assert!((obj - res.objective).abs() < 1e-9 * scale);
        }
    }
}

#[test]
fn gpq_with_unit_q_is_a_rescaled_lp_problem() {
    let cfg = MapConfig::default();
    let mut r = RngState::new(23, 0).rng();
    let inst = sparse_instance(24, 12, 3, 0.1, &mut r).unwrap();
    for p in [1.0, 1.5, 2.0] {
        let params = GpqParams::new(p, 1.0).unwrap();
        let alpha = gpq_alpha(p, 1.0);
        let g = map_gpq_eps(&inst.a, &inst.y, inst.sigma, params, 1.0, &cfg).unwrap();
        // z = α w with w minimizing ½σ⁻²‖αA w − y‖² + ‖w‖_p^p.
        let w = map_lp(&(&inst.a * alpha), &inst.y, inst.sigma, p, &cfg).unwrap();
        for (zg, wl) in g.z.iter().zip(&w.z) {
            assert!((zg - alpha * wl).abs() < 1e-6 * (1.0 + zg.abs()), "p={p}: {zg} vs {}", alpha * wl);
        }
    }
}

#[test]
fn gpq_zero_data_minimizer_is_zero() {
    let cfg = MapConfig::default();
    let a = identity(5);
    for &(p, q, eps) in &[(0.5, 0.5, 1e-3), (1.0, 0.5, 0.1), (2.0, 0.25, 1.0), (1.5, 1.0, 1.0)] {
        let params = GpqParams::new(p, q).unwrap();
        let alpha = gpq_alpha(p, q);
        let sigma = 0.5;
        // Brute-force scalar objective over a grid containing 0.
        let f = |z: f64| 0.5 * z * z / (sigma * sigma) + (z / alpha).abs().powf(p) + (1.0 - q) * (eps + z.abs()).ln();
        let best = (-20_000..=20_000).map(|i| i as f64 * 5e-4).min_by(|x, y| f(*x).partial_cmp(&f(*y)).unwrap());
        assert_eq!(best, Some(0.0));
        let res = map_gpq_eps(&a, &[0.0; 5], sigma, params, eps, &cfg).unwrap();
        assert!(res.z.iter().all(|v| v.abs() < 1e-8), "{:?}", res.z);
    }
    let params = GpqParams::new(1.0, 0.5).unwrap();
    assert!(map_gpq_eps(&a, &[0.0; 5], 1.0, params, 0.0, &cfg).is_err());
    assert!(map_gpq_eps(&a, &[0.0; 5], 1.0, GpqParams::new(1.0, 2.0).unwrap(), 1.0, &cfg).is_err());
}

#[test]
fn smaller_epsilon_gives_more_small_entries() {
    let cfg = MapConfig::default();
    let params = GpqParams::new(0.5, 0.5).unwrap();
    let mut wins = 0;
    for seed in 0..10u64 {
        let mut r = RngState::new(24, seed).rng();
        let inst = sparse_instance(64, 32, 5, 0.01, &mut r).unwrap();
        let small = map_gpq_eps(&inst.a, &inst.y, inst.sigma, params, 1e-3, &cfg).unwrap();
        let large = map_gpq_eps(&inst.a, &inst.y, inst.sigma, params, 1.0, &cfg).unwrap();
        let count = |z: &[f64]| z.iter().filter(|v| v.abs() < 1e-2).count();
        wins += (count(&small.z) > count(&large.z)) as usize;
    }
    assert!(wins >= 8, "{wins}/10");
}

#[test]
fn support_f1_examples() {
    assert_eq!(support_f1(&[0.0, 0.0], &[0.0, 0.0], 0.1), 1.0);
    assert_eq!(support_f1(&[1.0, 0.0], &[1.0, 0.0], 0.1), 1.0);
    assert_eq!(support_f1(&[0.0, 1.0], &[1.0, 0.0], 0.1), 0.0);
    // tp = 1, fp = 1, fn = 1.
    assert!((support_f1(&[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0], 0.1) - 0.5).abs() < 1e-15);
}

#[test]
fn sparse_recovery_favours_p_below_one() {
    let cfg = MapConfig::default();
    let mut wins = 0;
    for seed in 0..50u64 {
        let mut r = RngState::new(25, seed).rng();
        let inst = sparse_instance(64, 32, 5, 0.01, &mut r).unwrap();
        assert_eq!(inst.truth.iter().filter(|v| **v != 0.0).count(), 5);
        let half = map_lp(&inst.a, &inst.y, inst.sigma, 0.5, &cfg).unwrap();
        let one = map_lp(&inst.a, &inst.y, inst.sigma, 1.0, &cfg).unwrap();
        wins += (support_f1(&half.z, &inst.truth, 0.1) >= support_f1(&one.z, &inst.truth, 0.1)) as usize;
    }
    assert!(wins >= 40, "{wins}/50");
}
