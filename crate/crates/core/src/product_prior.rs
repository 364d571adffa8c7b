//! Product priors `u = Σ_k γ_k ξ_k x_k` over periodic Haar and real Fourier
//! bases, truncated at `N` terms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::distributions::{compound_poisson_draw, GpqParams, JumpLaw};
use crate::error::{invalid, Error, Result};
use crate::grid::GridField;
use crate::stats::Estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// `x_1 = 1`, `x_2 = v_{0,0}`, `x_{2^j+n+1} = v_{j,n}` with
    /// `v_{j,n}(t) = 2^{j/2} ψ(2^j t - n)`.
    HaarPeriodic,
    /// `x_1 = 1`, `x_{2m} = √2 cos(2πmt)`, `x_{2m+1} = √2 sin(2πmt)`.
    FourierReal,
}

/// An orthonormal basis of `L²` on the unit-length circle, truncated at
/// `max_terms`. Indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub max_terms: usize,
}

/// Haar level and shift `(j, n)` of index `k ≥ 2`.
pub fn haar_level(k: usize) -> (u32, usize) {
    debug_assert!(k >= 2);
    let offset = k - 1;
    let j = usize::BITS - 1 - offset.leading_zeros();
    (j, offset - (1usize << j))
}

/// Frequency `m` of real Fourier index `k` (1 → 0, 2,3 → 1, 4,5 → 2, …).
pub fn fourier_frequency(k: usize) -> usize {
    k / 2
}

fn haar_mother(x: f64) -> f64 {
    if (0.0..0.5).contains(&x) {
        1.0
    } else if (0.5..1.0).contains(&x) {
        -1.0
    } else {
        0.0
    }
}

impl BasisSpec {
    pub fn new(kind: BasisKind, max_terms: usize) -> Result<Self> {
        if max_terms == 0 {
            return Err(invalid("max_terms", "must be at least 1"));
        }
        Ok(Self { kind, max_terms })
    }

    pub fn haar(max_terms: usize) -> Result<Self> {
        Self::new(BasisKind::HaarPeriodic, max_terms)
    }

    pub fn fourier(max_terms: usize) -> Result<Self> {
        Self::new(BasisKind::FourierReal, max_terms)
    }

    /// `x_k(t)`, with `t` reduced modulo 1.
    pub fn eval(&self, k: usize, t: f64) -> Result<f64> {
        if k == 0 || k > self.max_terms {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.max_terms,
            });
        }
        let w = t - t.floor();
        Ok(self.eval_unchecked(k, if w >= 1.0 { 0.0 } else { w }))
    }

    fn eval_unchecked(&self, k: usize, t: f64) -> f64 {
        if k == 1 {
            return 1.0;
        }
        match self.kind {
            BasisKind::HaarPeriodic => {
                let (j, n) = haar_level(k);
                let scale = f64::from(1u32 << j);
                scale.sqrt() * haar_mother(scale * t - n as f64)
            }
            BasisKind::FourierReal => {
                let phase = 2.0 * PI * fourier_frequency(k) as f64 * t;
                if k % 2 == 0 {
                    SQRT_2 * phase.cos()
                } else {
                    SQRT_2 * phase.sin()
                }
            }
        }
    }

    /// Smallest admissible synthesis grid: a power of two ≥ 2N.
    pub fn check_grid(&self, n_grid: usize) -> Result<()> {
        if n_grid < 2 * self.max_terms || !n_grid.is_power_of_two() {
            return Err(Error::GridTooCoarse {
                grid: n_grid,
                terms: self.max_terms,
            });
        }
        Ok(())
    }

    /// Adds `coeff · x_k` sampled at the `n_grid` nodes into `out`.
    fn accumulate(&self, k: usize, coeff: f64, out: &mut [f64]) {
        let n_grid = out.len();
        match (self.kind, k) {
            (_, 1) => out.iter_mut().for_each(|v| *v += coeff),
            (BasisKind::HaarPeriodic, _) => {
                // supports align with nodes exactly on dyadic grids
                let (j, n) = haar_level(k);
                let width = n_grid >> j;
                let start = n * width;
                let amp = coeff * f64::from(1u32 << j).sqrt();
                for v in &mut out[start..start + width / 2] {
                    *v += amp;
                }
                for v in &mut out[start + width / 2..start + width] {
                    *v -= amp;
                }
            }
            (BasisKind::FourierReal, _) => {
                for (i, v) in out.iter_mut().enumerate() {
                    *v += coeff * self.eval_unchecked(k, i as f64 / n_grid as f64);
                }
            }
        }
    }

    /// `u(t_i) = Σ_k c_k x_k(t_i)` on `t_i = i / n_grid`.
    ///
    /// Fewer than `N` coefficients is allowed (the tail is zero).
    pub fn synthesize(&self, coeffs: &[f64], n_grid: usize) -> Result<GridField> {
        if coeffs.len() > self.max_terms {
            return Err(Error::DimensionMismatch {
                expected: self.max_terms,
                got: coeffs.len(),
            });
        }
        self.check_grid(n_grid)?;
        let mut out = vec![0.0; n_grid];
        for (idx, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                self.accumulate(idx + 1, c, &mut out);
            }
        }
        Ok(GridField::new(out))
    }

    /// Column `k` (1-based) of the synthesis operator on an `n_grid` grid.
    pub fn column(&self, k: usize, n_grid: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.max_terms {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.max_terms,
            });
        }
        self.check_grid(n_grid)?;
        let mut out = vec![0.0; n_grid];
        self.accumulate(k, 1.0, &mut out);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightRule {
    /// `γ_{2^j+n+1} = (1 + 4^{j+1})^{-1/2}`; the scaling function takes the
    /// `j = -1` value `2^{-1/2}`.
    WaveletSobolev,
    /// `γ = (1 + m²)^{-s/2}` for the frequency `m` of each index.
    FourierPower { exponent: f64 },
    Explicit(Vec<f64>),
}

/// Weights `γ_1..γ_N` with the neglected energy `Σ_{k>N} γ_k²`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    pub rule: WeightRule,
    values: Vec<f64>,
    tail_energy: f64,
}

fn wavelet_weight(k: usize) -> f64 {
    if k == 1 {
        return 0.5f64.sqrt();
    }
    let (j, _) = haar_level(k);
    (1.0 + 4f64.powi(j as i32 + 1)).powf(-0.5)
}

fn fourier_weight(k: usize, s: f64) -> f64 {
    let m = fourier_frequency(k) as f64;
    (1.0 + m * m).powf(-0.5 * s)
}

impl WeightSequence {
    pub fn new(rule: WeightRule, n: usize) -> Result<Self> {
        let (values, tail_energy) = match &rule {
            WeightRule::WaveletSobolev => {
                let values: Vec<f64> = (1..=n).map(wavelet_weight).collect();
                // finish the partial level, then whole levels: 2^j terms of 1/(1+4^{j+1})
                let mut tail = 0.0;
                let mut k = n + 1;
                while k == 2 || (k > 2 && !(k - 1).is_power_of_two()) {
                    tail += wavelet_weight(k).powi(2);
                    k += 1;
                }
                let mut j = if k <= 2 { 0 } else { haar_level(k).0 as i32 };
                loop {
                    let level = 2f64.powi(j) / (1.0 + 4f64.powi(j + 1));
                    tail += level;
                    if level < 1e-18 * tail.max(1e-300) {
                        break;
                    }
                    j += 1;
                }
                (values, tail)
            }
            WeightRule::FourierPower { exponent } => {
                let s = *exponent;
                if !(s > 0.5 && s.is_finite()) {
                    return Err(invalid("exponent", "must exceed 1/2 for square-summable weights"));
                }
                let values: Vec<f64> = (1..=n).map(|k| fourier_weight(k, s)).collect();
                let mut tail = 0.0;
                let mut k = n + 1;
                if k % 2 == 1 && k > 1 {
                    tail += fourier_weight(k, s).powi(2);
                    k += 1;
                }
                // now k is even: whole (cos, sin) pairs from frequency k/2
                let first = (k / 2) as f64;
                let cutoff = first.max(1.0) + 200_000.0;
                let mut m = first;
                while m < cutoff {
                    tail += 2.0 * (1.0 + m * m).powf(-s);
                    m += 1.0;
                }
                // ∫_{cutoff-1/2}^∞ 2 m^{-2s} dm
                let edge = cutoff - 0.5;
                tail += 2.0 * edge.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0);
                (values, tail)
            }
            WeightRule::Explicit(v) => {
                if v.len() < n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: v.len(),
                    });
                }
                let tail = v[n..].iter().map(|g| g * g).sum();
                (v[..n].to_vec(), tail)
            }
        };
        if values.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(invalid("weights", "entries must be finite and strictly positive"));
        }
        Ok(Self {
            rule,
            values,
            tail_energy,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ_{k>N} γ_k²`.
    pub fn tail_energy(&self) -> f64 {
        self.tail_energy
    }

    /// `Σ_{k>n} γ_k²` for a shorter truncation `n ≤ N`.
    pub fn tail_energy_after(&self, n: usize) -> f64 {
        let n = n.min(self.values.len());
        self.tail_energy + self.values[n..].iter().map(|g| g * g).sum::<f64>()
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum()
    }
}

/// Law of the i.i.d. coefficients `ξ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientLaw {
    Gpq(GpqParams),
    /// `CPois(rate, Lap(0,1))`.
    CompoundPoissonLaplace { rate: f64 },
}

impl CoefficientLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CoefficientLaw::CompoundPoissonLaplace { rate } if !(rate >= 0.0 && rate.is_finite()) => {
                Err(invalid("rate", format!("must be finite and non-negative, got {rate}")))
            }
            _ => Ok(()),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            CoefficientLaw::Gpq(g) => g.moment(2),
            CoefficientLaw::CompoundPoissonLaplace { rate } => 2.0 * rate,
        }
    }

    /// Whether the law has a Lebesgue density (no atom at zero).
    pub fn has_density(&self) -> bool {
        matches!(self, CoefficientLaw::Gpq(_))
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CoefficientLaw::Gpq(g) => rand::distr::Distribution::sample(g, rng),
            CoefficientLaw::CompoundPoissonLaplace { rate } => {
                compound_poisson_draw(*rate, &JumpLaw::standard_laplace(), rng)
            }
        }
    }
}

/// Prior over the first `N` expansion coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPriorSpec {
    pub basis: BasisSpec,
    pub weights: WeightSequence,
    pub law: CoefficientLaw,
}

impl ProductPriorSpec {
    pub fn new(basis: BasisSpec, weights: WeightSequence, law: CoefficientLaw) -> Result<Self> {
        if weights.len() != basis.max_terms {
            return Err(Error::DimensionMismatch {
                expected: basis.max_terms,
                got: weights.len(),
            });
        }
        law.validate()?;
        if !law.variance().is_finite() {
            return Err(invalid("law", "coefficient variance must be finite"));
        }
        Ok(Self { basis, weights, law })
    }

    pub fn terms(&self) -> usize {
        self.basis.max_terms
    }

    /// `(γ_k ξ_k)_{k ≤ N}`.
    pub fn sample_coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.weights.values().iter().map(|g| g * self.law.draw(rng)).collect()
    }

    pub fn synthesize(&self, coeffs: &[f64], n_grid: usize) -> Result<GridField> {
        self.basis.synthesize(coeffs, n_grid)
    }

    /// `E ‖u‖² = Σ γ_k² Var ξ`.
    pub fn expected_energy(&self) -> f64 {
        self.weights.energy() * self.law.variance()
    }

    /// Monte Carlo estimate of `E ‖u‖²_{L²}` via Parseval.
    pub fn second_moment_estimate<R: Rng + ?Sized>(&self, n_samples: usize, rng: &mut R) -> Result<Estimate> {
        if n_samples < 100 {
            return Err(invalid("n_samples", "need at least 100 samples"));
        }
        let energies: Vec<f64> = (0..n_samples)
            .map(|_| self.sample_coefficients(rng).iter().map(|c| c * c).sum())
            .collect();
        Ok(Estimate::from_sample(&energies))
    }

    /// `E exp(i Σ ϱ_k u_k)` for a finite functional `(index, ϱ_k)`.
    ///
    /// Supported for Gaussian coefficients and for compound Poisson Laplace
    /// coefficients, whose expectation `E cos(γϱξ)` is computed by quadrature.
    pub fn product_char_fn(&self, functional: &[(usize, f64)]) -> Result<Complex64> {
        let merged = self.merge_functional(functional)?;
        let mut log_cf = 0.0;
        match self.law {
            CoefficientLaw::Gpq(g) if g.p() == 2.0 && g.q() == 1.0 => {
                for (k, rho) in merged {
                    let a = self.weights.values()[k - 1] * rho;
                    log_cf -= 0.5 * a * a;
                }
            }
            CoefficientLaw::CompoundPoissonLaplace { rate } => {
                let laplace = JumpLaw::standard_laplace();
                for (k, rho) in merged {
                    let a = self.weights.values()[k - 1] * rho;
                    if a != 0.0 && rate > 0.0 {
                        log_cf += rate * laplace.expect(|x| (a * x).cos() - 1.0);
                    }
                }
            }
            CoefficientLaw::Gpq(_) => {
                return Err(Error::Unsupported(format!(
                    "product characteristic function for {:?}",
                    self.law
                )))
            }
        }
        Ok(Complex64::new(log_cf.exp(), 0.0))
    }

    fn merge_functional(&self, functional: &[(usize, f64)]) -> Result<Vec<(usize, f64)>> {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for &(k, rho) in functional {
            if k == 0 || k > self.terms() {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    max: self.terms(),
                });
            }
            match merged.iter_mut().find(|(i, _)| *i == k) {
                Some(entry) => entry.1 += rho,
                None => merged.push((k, rho)),
            }
        }
        Ok(merged)
    }
}

/// Empirical `mean exp(i Σ ϱ_k c_k)` over coefficient samples.
pub fn empirical_char_fn(samples: &[Vec<f64>], functional: &[(usize, f64)]) -> Complex64 {
    let n = samples.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for c in samples {
        let phase: f64 = functional.iter().map(|&(k, rho)| rho * c[k - 1]).sum();
        re += phase.cos();
        im += phase.sin();
    }
    Complex64::new(re / n, im / n)
}

/// Fraction of `|c| < ε` per sample set and threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressibilityReport {
    pub thresholds: Vec<f64>,
    /// `fractions[set][threshold]`.
    pub fractions: Vec<Vec<f64>>,
}

pub fn compressibility_report(sets: &[&[f64]], thresholds: &[f64]) -> Result<CompressibilityReport> {
    if sets.iter().any(|s| s.is_empty()) || sets.is_empty() {
        return Err(invalid("samples", "every sample set must be non-empty"));
    }
    let fractions = sets
        .iter()
        .map(|set| {
            thresholds
                .iter()
                .map(|&eps| set.iter().filter(|c| c.abs() < eps).count() as f64 / set.len() as f64)
                .collect()
        })
        .collect();
    Ok(CompressibilityReport {
        thresholds: thresholds.to_vec(),
        fractions,
    })
}
