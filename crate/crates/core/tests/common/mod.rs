//! Reference computations that do not go through the library.
#![allow(dead_code)]

use idprior_core::bayes_core::{NoiseSpec, PosteriorProblem, PriorModel};
use idprior_core::distributions::GpqParams;
use idprior_core::forward_models::{DeconvModel, ForwardModel};
use idprior_core::grid::GridField;
use idprior_core::product_prior::{BasisSpec, CoefficientLaw, ProductPriorSpec, WeightRule, WeightSequence};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{gamma, gamma_lr};

/// Scale of the unit-variance `G_{p,q}` law.
pub fn gpq_alpha(p: f64, q: f64) -> f64 {
    (gamma(q / p) / gamma((2.0 + q) / p)).sqrt()
}

/// `G_{p,q}` density, written out from its definition.
pub fn gpq_pdf(p: f64, q: f64, t: f64) -> f64 {
    let a = gpq_alpha(p, q);
    let x = (t / a).abs();
    p / (2.0 * a * gamma(q / p)) * x.powf(q - 1.0) * (-x.powf(p)).exp()
}

/// `G_{p,q}` CDF: `(|t|/α)^p` is Gamma(q/p, 1) distributed.
pub fn gpq_cdf(p: f64, q: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    let a = gpq_alpha(p, q);
    let half = 0.5 * gamma_lr(q / p, (t.abs() / a).powf(p));
    if t > 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// `∫_0^∞ f(t) dt` by the trapezoid rule in `t = e^x`.
///
/// The substitution turns power singularities at 0 and stretched-exponential
/// tails into integrands with exponential decay at both ends, where the
/// trapezoid rule converges geometrically.
pub fn half_line(f: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi, h) = (-200.0, 60.0, 2e-3);
    let n = ((hi - lo) / h) as usize;
    let mut s = 0.0;
    for i in 0..=n {
        let x = lo + i as f64 * h;
        let t = x.exp();
        let v = f(t) * t;
        if v.is_finite() {
            s += if i == 0 || i == n { 0.5 * v } else { v };
        }
    }
    s * h
}

/// `∫_a^b f` by composite Simpson with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Kolmogorov–Smirnov distance of a sample to a CDF.
pub fn ks(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let c = cdf(x);
        d.max((c - i as f64 / n).abs()).max(((i + 1) as f64 / n - c).abs())
    })
}

pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// One Fourier mode with coefficient `N(0, γ²)`, observed directly:
/// `y = c + σ η`.
pub fn conjugate_problem(gamma: f64, sigma: f64, y: f64) -> PosteriorProblem {
    let basis = BasisSpec::fourier(1).unwrap();
    let weights = WeightSequence::new(WeightRule::Explicit(vec![gamma]), 1).unwrap();
    let spec = ProductPriorSpec::new(basis, weights, CoefficientLaw::Gpq(GpqParams::standard_normal())).unwrap();
    let forward = ForwardModel::Deconv(DeconvModel::new(GridField::constant(4, 1.0), vec![0.0]).unwrap());
    PosteriorProblem::new(
        PriorModel::Product(spec),
        forward,
        NoiseSpec::isotropic(1, sigma).unwrap(),
        vec![y],
        4,
        1,
    )
    .unwrap()
}

/// Posterior mean and variance of the conjugate problem.
pub fn conjugate_posterior(gamma: f64, sigma: f64, y: f64) -> (f64, f64) {
    let s2 = 1.0 / (1.0 / (gamma * gamma) + 1.0 / (sigma * sigma));
    (s2 * y / (sigma * sigma), s2)
}

pub fn gauss_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean) * (x - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// `d_H = (½ ∫ (√a − √b)²)^{1/2}` between two Gaussians, by quadrature.
pub fn gauss_hellinger_quadrature(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    let s = v1.max(v2).sqrt();
    let (lo, hi) = (m1.min(m2) - 12.0 * s, m1.max(m2) + 12.0 * s);
    let f = |x: f64| {
        let d = gauss_pdf(x, m1, v1).sqrt() - gauss_pdf(x, m2, v2).sqrt();
        d * d
    };
    (0.5 * simpson(f, lo, hi, 20_000)).sqrt()
}

/// `d_TV = ½ ∫ |a − b|` between two Gaussians, by quadrature.
pub fn gauss_tv_quadrature(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    let s = v1.max(v2).sqrt();
    let (lo, hi) = (m1.min(m2) - 12.0 * s, m1.max(m2) + 12.0 * s);
    0.5 * simpson(|x| (gauss_pdf(x, m1, v1) - gauss_pdf(x, m2, v2)).abs(), lo, hi, 20_000)
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let len = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * len..(b + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    mean_se(&means)
}
