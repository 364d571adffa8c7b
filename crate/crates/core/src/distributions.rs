//! Scalar shrinkage densities and finite-activity infinitely divisible laws.
//!
//! The `G_{p,q}` family has unit-variance density
//! `p / (2αΓ(q/p)) · |t/α|^{q-1} · exp(-|t/α|^p)` with
//! `α = sqrt(Γ(q/p) / Γ((2+q)/p))`. `G_{p,1}` is the generalized normal
//! (`ℓ_p`) family and `G_{p,p}` the symmetrized Weibull family.
//!
//! Infinitely divisible laws are restricted to finite Lévy measures, so every
//! law here is `m + N(0, σ²) + CPois(c, λ̃)` with the compensator folded into
//! the shift `m`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Exp1, Gamma, Poisson, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::quadrature;
use crate::special::{ln_gamma, normal_cdf};

/// Quadrature tolerance used for expectations under jump laws.
pub const EXPECTATION_TOL: f64 = 1e-12;

/// Shape parameters of a `G_{p,q}` law with its derived scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpqParams {
    p: f64,
    q: f64,
    alpha: f64,
    log_norm: f64,
}

impl GpqParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(invalid("p", "must be a finite positive number"));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(invalid("q", "must be a finite positive number"));
        }
        let lg_shape = ln_gamma(q / p);
        let alpha = (0.5 * (lg_shape - ln_gamma((2.0 + q) / p))).exp();
        let log_norm = p.ln() - (2.0 * alpha).ln() - lg_shape;
        Ok(Self {
            p,
            q,
            alpha,
            log_norm,
        })
    }

    /// Generalized normal law `G_{p,1}`.
    pub fn ell_p(p: f64) -> Result<Self> {
        Self::new(p, 1.0)
    }

    /// Symmetrized Weibull law `G_{p,p}`.
    pub fn weibull(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn standard_normal() -> Self {
        Self::new(2.0, 1.0).expect("valid parameters")
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Log density. Returns `+∞` at the origin when `q < 1`.
    pub fn log_pdf(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Domain(alloc::format!("log_pdf at non-finite point {t}")));
        }
        Ok(self.log_pdf_unchecked(t))
    }

    pub(crate) fn log_pdf_unchecked(&self, t: f64) -> f64 {
        let r = t.abs() / self.alpha;
        if r == 0.0 {
            return if self.q < 1.0 {
                f64::INFINITY
            } else if self.q == 1.0 {
                self.log_norm
            } else {
                f64::NEG_INFINITY
            };
        }
        let ln_r = r.ln();
        self.log_norm + (self.q - 1.0) * ln_r - (self.p * ln_r).exp()
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.log_pdf_unchecked(t).exp()
    }

    /// `E ξ^s`; zero for odd `s`.
    pub fn moment(&self, s: u32) -> f64 {
        if s % 2 == 1 {
            return 0.0;
        }
        if s == 0 {
            return 1.0;
        }
        let s = f64::from(s);
        (s * self.alpha.ln() + ln_gamma((s + self.q) / self.p) - ln_gamma(self.q / self.p)).exp()
    }

    /// `E |ξ|`.
    pub fn abs_mean(&self) -> f64 {
        (self.alpha.ln() + ln_gamma((1.0 + self.q) / self.p) - ln_gamma(self.q / self.p)).exp()
    }

    /// `n` i.i.d. draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let gamma = self.gamma();
        (0..n).map(|_| self.draw_with(&gamma, rng)).collect()
    }

    fn gamma(&self) -> Gamma<f64> {
        Gamma::new(self.q / self.p, 1.0).expect("shape q/p is positive")
    }

    // (|ξ|/α)^p ~ Gamma(q/p, 1), sign independent and symmetric
    fn draw_with<R: Rng + ?Sized>(&self, gamma: &Gamma<f64>, rng: &mut R) -> f64 {
        let g: f64 = gamma.sample(rng);
        let magnitude = self.alpha * g.powf(1.0 / self.p);
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }
}

impl Distribution<f64> for GpqParams {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.draw_with(&self.gamma(), rng)
    }
}

/// Normalized Lévy measure `λ̃` of a finite-activity law: the jump-size law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpLaw {
    PointMass(f64),
    Normal { mean: f64, std: f64 },
    /// Laplace law with density `exp(-|x|/scale) / (2 scale)`.
    Laplace { scale: f64 },
    Gpq(GpqParams),
}

impl JumpLaw {
    pub fn standard_normal() -> Self {
        JumpLaw::Normal {
            mean: 0.0,
            std: 1.0,
        }
    }

    pub fn standard_laplace() -> Self {
        JumpLaw::Laplace { scale: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            JumpLaw::PointMass(x) if !x.is_finite() => Err(invalid("jump_law", "point mass must be finite")),
            JumpLaw::Normal { mean, std } if !(mean.is_finite() && std >= 0.0 && std.is_finite()) => {
                Err(invalid("jump_law", "normal needs finite mean and std >= 0"))
            }
            JumpLaw::Laplace { scale } if !(scale > 0.0 && scale.is_finite()) => {
                Err(invalid("jump_law", "laplace scale must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match *self {
            JumpLaw::PointMass(x) => x == 0.0,
            JumpLaw::Normal { mean, .. } => mean == 0.0,
            JumpLaw::Laplace { .. } | JumpLaw::Gpq(_) => true,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::PointMass(x) => x,
            JumpLaw::Normal { mean, .. } => mean,
            JumpLaw::Laplace { .. } | JumpLaw::Gpq(_) => 0.0,
        }
    }

    /// `E ξ²`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            JumpLaw::PointMass(x) => x * x,
            JumpLaw::Normal { mean, std } => mean * mean + std * std,
            JumpLaw::Laplace { scale } => 2.0 * scale * scale,
            JumpLaw::Gpq(g) => g.moment(2),
        }
    }

    /// `E |ξ|`.
    pub fn abs_mean(&self) -> f64 {
        match *self {
            JumpLaw::PointMass(x) => x.abs(),
            JumpLaw::Normal { mean, std } => {
                if std == 0.0 {
                    return mean.abs();
                }
                let z = mean / std;
                std * (2.0 / PI).sqrt() * (-0.5 * z * z).exp() + mean * (1.0 - 2.0 * normal_cdf(-z))
            }
            JumpLaw::Laplace { scale } => scale,
            JumpLaw::Gpq(g) => g.abs_mean(),
        }
    }

    /// `E f(ξ)` by quadrature against the law's density.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        match *self {
            JumpLaw::PointMass(x) => f(x),
            JumpLaw::Normal { mean, std } => {
                if std == 0.0 {
                    return f(mean);
                }
                let norm = 1.0 / (2.0 * PI).sqrt();
                quadrature::sinh_sinh(|z| f(mean + std * z) * norm * (-0.5 * z * z).exp(), EXPECTATION_TOL).value
            }
            JumpLaw::Laplace { scale } => {
                quadrature::split_at_origin(|x| f(x) * (-x.abs() / scale).exp() / (2.0 * scale), EXPECTATION_TOL)
                    .value
            }
            JumpLaw::Gpq(g) => quadrature::split_at_origin(|x| f(x) * g.pdf(x), EXPECTATION_TOL).value,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::PointMass(x) => x,
            JumpLaw::Normal { mean, std } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std * z
            }
            JumpLaw::Laplace { scale } => {
                let e: f64 = rng.sample(Exp1);
                if rng.random::<bool>() {
                    scale * e
                } else {
                    -scale * e
                }
            }
            JumpLaw::Gpq(g) => Distribution::sample(&g, rng),
        }
    }
}

impl Distribution<f64> for JumpLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.draw(rng)
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate >= 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(alloc::format!(
            "Poisson rate must be finite and non-negative, got {rate}"
        )))
    }
}

/// Poisson count with the `rate = 0` case handled as the point mass at zero.
pub(crate) fn poisson_count<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate == 0.0 {
        return 0;
    }
    let n: f64 = Poisson::new(rate).expect("positive finite rate").sample(rng);
    n as u64
}

/// One draw of `Σ_{k=1}^{τ} u_k` with `τ ~ Poisson(rate)`.
pub(crate) fn compound_poisson_draw<R: Rng + ?Sized>(rate: f64, law: &JumpLaw, rng: &mut R) -> f64 {
    let count = poisson_count(rate, rng);
    (0..count).map(|_| law.draw(rng)).sum()
}

/// `n` draws from `CPois(rate, law)`. An empty sum is exactly zero.
pub fn compound_poisson_sample<R: Rng + ?Sized>(
    rate: f64,
    law: &JumpLaw,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_rate(rate)?;
    law.validate()?;
    Ok((0..n).map(|_| compound_poisson_draw(rate, law, rng)).collect())
}

/// Finite-activity Lévy–Khintchine triple `(m, σ², c·λ̃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarIdTriplet {
    pub m: f64,
    pub sigma2: f64,
    pub levy_rate: f64,
    pub jump_law: JumpLaw,
}

impl ScalarIdTriplet {
    pub fn new(m: f64, sigma2: f64, levy_rate: f64, jump_law: JumpLaw) -> Result<Self> {
        if !m.is_finite() {
            return Err(invalid("m", "must be finite"));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(invalid("sigma2", "must be finite and non-negative"));
        }
        if !(levy_rate >= 0.0 && levy_rate.is_finite()) {
            return Err(invalid("levy_rate", "must be finite and non-negative"));
        }
        jump_law.validate()?;
        Ok(Self {
            m,
            sigma2,
            levy_rate,
            jump_law,
        })
    }

    /// The `n`-th convolution root: `ID(m/n, σ²/n, c/n · λ̃)`.
    pub fn root(&self, n: u32) -> Self {
        let n = f64::from(n);
        Self {
            m: self.m / n,
            sigma2: self.sigma2 / n,
            levy_rate: self.levy_rate / n,
            jump_law: self.jump_law,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let gaussian = if self.sigma2 > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            self.sigma2.sqrt() * z
        } else {
            0.0
        };
        self.m + gaussian + compound_poisson_draw(self.levy_rate, &self.jump_law, rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// Characteristic function
    /// `exp(i m s - σ² s²/2 + c E[exp(i s ξ) - 1])`, expectation by quadrature.
    pub fn char_fn(&self, s: f64) -> Complex64 {
        let mut exponent = Complex64::new(-0.5 * self.sigma2 * s * s, self.m * s);
        if self.levy_rate > 0.0 && s != 0.0 {
            let re = self.jump_law.expect(|x| (s * x).cos() - 1.0);
            let im = if self.jump_law.is_symmetric() {
                0.0
            } else {
                self.jump_law.expect(|x| (s * x).sin())
            };
            exponent += Complex64::new(re, im) * self.levy_rate;
        }
        exponent.exp()
    }
}

impl Distribution<f64> for ScalarIdTriplet {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.draw(rng)
    }
}

/// Submultiplicative test functions `h` for tail integrability checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Submultiplicative {
    /// `max(1, |t|)^r`, `r > 0`.
    Power(f64),
    /// `exp(|t|^β)`, `0 < β < 1`.
    StretchedExp(f64),
}

impl Submultiplicative {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Submultiplicative::Power(r) => t.abs().max(1.0).powf(r),
            Submultiplicative::StretchedExp(beta) => t.abs().powf(beta).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Submultiplicative::Power(r) if !(r > 0.0 && r.is_finite()) => Err(invalid("h", "power must be positive")),
            Submultiplicative::StretchedExp(b) if !(b > 0.0 && b < 1.0) => {
                Err(invalid("h", "stretched exponent must lie in (0, 1)"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailVerdict {
    Finite,
    Divergent,
}

/// Trimmed-mean stability diagnostic for `E h(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailReport {
    pub mean: f64,
    /// Mean of `h` after dropping the largest 1% of values.
    pub trimmed_1: f64,
    /// Mean of `h` after dropping the largest 5% of values.
    pub trimmed_5: f64,
    /// `(mean - trimmed_1) / (trimmed_1 - trimmed_5)`.
    pub ratio: f64,
    pub verdict: TailVerdict,
}

/// Divergence threshold on [`TailReport::ratio`].
pub const TAIL_RATIO_THRESHOLD: f64 = 2.0;

/// Heuristic finite/divergent verdict for `E h(ξ)` from a sample.
///
/// The top 1% of `h` values moving the mean by more than twice what the next
/// 4% move it flags a divergent mean. Diagnostic only.
pub fn submultiplicative_tail_check(sample: &[f64], h: Submultiplicative) -> Result<TailReport> {
    if sample.is_empty() {
        return Err(invalid("sample", "must be non-empty"));
    }
    h.validate()?;
    let mut values: Vec<f64> = sample.iter().map(|&t| h.eval(t)).collect();
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    let trimmed = |frac: f64| {
        let keep = (n - ((n as f64) * frac).floor() as usize).max(1);
        values[..keep].iter().sum::<f64>() / keep as f64
    };
    let mean = trimmed(0.0);
    let trimmed_1 = trimmed(0.01);
    let trimmed_5 = trimmed(0.05);
    let lead = mean - trimmed_1;
    let body = trimmed_1 - trimmed_5;
    let ratio = if body > 0.0 {
        lead / body
    } else if lead > 0.0 || !mean.is_finite() {
        f64::INFINITY
    } else {
        0.0
    };
    let verdict = if ratio > TAIL_RATIO_THRESHOLD || !mean.is_finite() {
        TailVerdict::Divergent
    } else {
        TailVerdict::Finite
    };
    Ok(TailReport {
        mean,
        trimmed_1,
        trimmed_5,
        ratio,
        verdict,
    })
}
