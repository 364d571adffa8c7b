//! Likelihood potentials, projected potentials and evidence estimates for a
//! prior, a forward model and Gaussian noise.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::distributions::JumpLaw;
use crate::error::{invalid, Error, Result};
use crate::forward_models::ForwardModel;
use crate::grid::GridField;
use crate::levy_process::{sample_cpp_path, JumpPath};
use crate::product_prior::ProductPriorSpec;
use crate::rng::RngState;
use crate::special::log_sum_exp;

/// Gaussian noise `N(0, Σ)` held through the Cholesky factor `Σ = LLᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    chol: DMatrix<f64>,
    isotropic: Option<f64>,
}

impl NoiseSpec {
    /// `Σ = σ² I_m`.
    pub fn isotropic(m: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid("sigma", format!("must be positive and finite, got {sigma}")));
        }
        if m == 0 {
            return Err(invalid("m", "noise dimension must be positive"));
        }
        Ok(Self {
            chol: DMatrix::from_diagonal_element(m, m, sigma),
            isotropic: Some(sigma),
        })
    }

    pub fn from_covariance(cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() || cov.nrows() == 0 {
            return Err(invalid("covariance", "must be a non-empty square matrix"));
        }
        let n = cov.nrows();
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (cov[(i, j)], cov[(j, i)]);
                if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1.0) {
                    return Err(invalid("covariance", "must be symmetric"));
                }
            }
        }
        let chol = nalgebra::linalg::Cholesky::new(cov)
            .ok_or_else(|| invalid("covariance", "must be positive definite"))?;
        Ok(Self {
            chol: chol.l(),
            isotropic: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.chol.nrows()
    }

    pub fn isotropic_sigma(&self) -> Option<f64> {
        self.isotropic
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.chol * self.chol.transpose()
    }

    /// Lower Cholesky factor `L`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// `L⁻¹ x`.
    pub fn whiten(&self, x: &[f64]) -> Vec<f64> {
        if let Some(s) = self.isotropic {
            return x.iter().map(|v| v / s).collect();
        }
        let mut out = x.to_vec();
        let l = &self.chol;
        for i in 0..out.len() {
            let mut acc = out[i];
            for j in 0..i {
                acc -= l[(i, j)] * out[j];
            }
            out[i] = acc / l[(i, i)];
        }
        out
    }

    /// `‖Σ^{-1/2} x‖₂`.
    pub fn sigma_norm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.whiten(x).iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

pub fn sigma_norm(x: &[f64], noise: &NoiseSpec) -> Result<f64> {
    noise.sigma_norm(x)
}

/// `½ ‖a − b‖²` for whitened vectors.
pub fn half_sq_dist(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorModel {
    Product(ProductPriorSpec),
    /// Compound Poisson path on `[0, 1]` rasterized to the grid.
    JumpProcess { rate: f64, law: JumpLaw },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorDraw {
    Coefficients(Vec<f64>),
    Path(JumpPath),
}

/// Prior, forward map, noise and data.
///
/// For product priors the first `truncation` coefficients are active.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorProblem {
    pub prior: PriorModel,
    pub forward: ForwardModel,
    pub noise: NoiseSpec,
    pub data: Vec<f64>,
    pub grid_size: usize,
    pub truncation: usize,
}

impl PosteriorProblem {
    pub fn new(
        prior: PriorModel,
        forward: ForwardModel,
        noise: NoiseSpec,
        data: Vec<f64>,
        grid_size: usize,
        truncation: usize,
    ) -> Result<Self> {
        let m = forward.n_obs();
        if noise.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: noise.dim(),
            });
        }
        if data.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("data", "non-finite entry"));
        }
        if let Some(n) = forward.grid_size() {
            if n != grid_size {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: grid_size,
                });
            }
        }
        if grid_size == 0 {
            return Err(invalid("grid_size", "must be positive"));
        }
        match &prior {
            PriorModel::Product(spec) => {
                if truncation > spec.terms() {
                    return Err(invalid(
                        "truncation",
                        format!("{truncation} exceeds the prior's {} terms", spec.terms()),
                    ));
                }
                spec.basis.check_grid(grid_size)?;
            }
            PriorModel::JumpProcess { rate, law } => {
                if !(*rate >= 0.0) || !rate.is_finite() {
                    return Err(invalid("rate", format!("must be finite and non-negative, got {rate}")));
                }
                law.validate()?;
            }
        }
        Ok(Self {
            prior,
            forward,
            noise,
            data,
            grid_size,
            truncation,
        })
    }

    /// Same problem with different data.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        if data.len() != self.data.len() {
            return Err(Error::DimensionMismatch {
                expected: self.data.len(),
                got: data.len(),
            });
        }
        let mut out = self.clone();
        out.data = data;
        Ok(out)
    }

    pub fn n_obs(&self) -> usize {
        self.data.len()
    }

    pub fn draw_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PriorDraw> {
        match &self.prior {
            PriorModel::Product(spec) => {
                let mut c = spec.sample_coefficients(rng);
                c.truncate(self.truncation);
                Ok(PriorDraw::Coefficients(c))
            }
            PriorModel::JumpProcess { rate, law } => Ok(PriorDraw::Path(sample_cpp_path(*rate, law, rng)?)),
        }
    }

    pub fn field(&self, draw: &PriorDraw) -> Result<GridField> {
        match (draw, &self.prior) {
            (PriorDraw::Coefficients(c), PriorModel::Product(spec)) => spec.synthesize(c, self.grid_size),
            (PriorDraw::Path(p), _) => Ok(p.rasterize(self.grid_size)),
            (PriorDraw::Coefficients(_), PriorModel::JumpProcess { .. }) => {
                Err(Error::Unsupported("coefficient draw for a jump-process prior".into()))
            }
        }
    }

    fn check_field(&self, u: &GridField) -> Result<()> {
        if u.len() != self.grid_size {
            return Err(Error::DimensionMismatch {
                expected: self.grid_size,
                got: u.len(),
            });
        }
        Ok(())
    }

    /// `½ ‖G(u) − y‖²_Σ`.
    pub fn gaussian_potential(&self, u: &GridField) -> Result<f64> {
        self.potential_with_data(u, &self.data)
    }

    pub fn potential_with_data(&self, u: &GridField, y: &[f64]) -> Result<f64> {
        self.check_field(u)?;
        let g = self.forward.forward(u)?;
        let r: Vec<f64> = g.iter().zip(y).map(|(a, b)| a - b).collect();
        let n = self.noise.sigma_norm(&r)?;
        Ok(0.5 * n * n)
    }

    /// `Φ(P_N u; y)`: the potential of the synthesis of the first `n` coefficients.
    pub fn projected_potential(&self, coeffs: &[f64], n: usize) -> Result<f64> {
        let spec = match &self.prior {
            PriorModel::Product(spec) => spec,
            PriorModel::JumpProcess { .. } => {
                return Err(Error::Unsupported("projection of a jump-process prior".into()))
            }
        };
        if n > coeffs.len() {
            return Err(invalid("n", format!("{n} exceeds the {} coefficients", coeffs.len())));
        }
        let u = spec.synthesize(&coeffs[..n], self.grid_size)?;
        self.gaussian_potential(&u)
    }

    /// The forward map composed with synthesis, as a matrix over the active
    /// coefficients. Only for product priors.
    pub fn compile(&self) -> Result<CompiledOperator> {
        let spec = match &self.prior {
            PriorModel::Product(spec) => spec,
            PriorModel::JumpProcess { .. } => {
                return Err(Error::Unsupported("compiling a jump-process prior".into()))
            }
        };
        let b = self.forward.inner_matrix(self.grid_size)?;
        let mut inner = DMatrix::zeros(b.nrows(), self.truncation);
        for k in 1..=self.truncation {
            let col = DVector::from_vec(spec.basis.column(k, self.grid_size)?);
            inner.set_column(k - 1, &(&b * col));
        }
        Ok(CompiledOperator {
            inner,
            quadratic: !self.forward.is_linear(),
            noise: self.noise.clone(),
        })
    }

    /// Whitened prediction `L⁻¹ G(u)` and `h = ‖u‖²_{L²}` for one prior draw.
    pub fn bank_entry(&self, compiled: Option<&CompiledOperator>, draw: &PriorDraw) -> Result<(Vec<f64>, f64)> {
        match (draw, compiled) {
            (PriorDraw::Coefficients(c), Some(op)) => {
                let h = c.iter().map(|v| v * v).sum();
                Ok((self.noise.whiten(&op.predict(c)), h))
            }
            _ => {
                let u = self.field(draw)?;
                let g = self.forward.forward(&u)?;
                Ok((self.noise.whiten(&g), u.l2_norm_squared()))
            }
        }
    }

    /// Prior draws `i = 0..n`, draw `i` from `state.substream(i)`.
    pub fn draw_bank(&self, n: usize, state: &RngState) -> Result<DrawBank> {
        let compiled = match self.prior {
            PriorModel::Product(_) => Some(self.compile()?),
            PriorModel::JumpProcess { .. } => None,
        };
        let mut bank = DrawBank::with_capacity(self.n_obs(), n);
        for i in 0..n {
            let mut rng = state.substream(i as u64).rng();
            let draw = self.draw_prior(&mut rng)?;
            let (p, h) = self.bank_entry(compiled.as_ref(), &draw)?;
            bank.push(&p, h);
        }
        Ok(bank)
    }

    pub fn whitened_data(&self) -> Vec<f64> {
        self.noise.whiten(&self.data)
    }
}

pub fn gaussian_potential(problem: &PosteriorProblem, u: &GridField) -> Result<f64> {
    problem.gaussian_potential(u)
}

pub fn projected_potential(problem: &PosteriorProblem, coeffs: &[f64], n: usize) -> Result<f64> {
    problem.projected_potential(coeffs, n)
}

/// `c ↦ Bc` (linear) or `c ↦ (Bc)²` (quadratic), with the noise model attached.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledOperator {
    pub inner: DMatrix<f64>,
    pub quadratic: bool,
    pub noise: NoiseSpec,
}

impl CompiledOperator {
    pub fn n_obs(&self) -> usize {
        self.inner.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.inner.ncols()
    }

    /// `Bc` over the first `c.len()` columns.
    pub fn inner_product(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_obs()];
        for (k, &ck) in c.iter().enumerate() {
            if ck != 0.0 {
                for (o, b) in out.iter_mut().zip(self.inner.column(k).iter()) {
                    *o += ck * b;
                }
            }
        }
        out
    }

    pub fn finish(&self, mut inner: Vec<f64>) -> Vec<f64> {
        if self.quadratic {
            for v in inner.iter_mut() {
                *v *= *v;
            }
        }
        inner
    }

    pub fn predict(&self, c: &[f64]) -> Vec<f64> {
        self.finish(self.inner_product(c))
    }

    pub fn potential(&self, c: &[f64], y: &[f64]) -> f64 {
        let r: Vec<f64> = self.predict(c).iter().zip(y).map(|(a, b)| a - b).collect();
        let w = self.noise.whiten(&r);
        0.5 * w.iter().map(|v| v * v).sum::<f64>()
    }

    /// Whitened predictions of the prefixes `c[..n]` for each `n` in
    /// `checkpoints` (non-decreasing), accumulated term by term.
    pub fn prefix_predictions(&self, c: &[f64], checkpoints: &[usize]) -> Vec<Vec<f64>> {
        let mut acc = vec![0.0; self.n_obs()];
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut k = 0;
        for &n in checkpoints {
            while k < n {
                let ck = c[k];
                if ck != 0.0 {
                    for (o, b) in acc.iter_mut().zip(self.inner.column(k).iter()) {
                        *o += ck * b;
                    }
                }
                k += 1;
            }
            out.push(self.noise.whiten(&self.finish(acc.clone())));
        }
        out
    }
}

/// Whitened predictions `L⁻¹G(u_i)` and test-function values `h(u_i)` for a
/// fixed set of prior draws, so potentials under any data are cheap.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DrawBank {
    m: usize,
    preds: Vec<f64>,
    h: Vec<f64>,
}

impl DrawBank {
    pub fn with_capacity(m: usize, n: usize) -> Self {
        Self {
            m,
            preds: Vec::with_capacity(m * n),
            h: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, pred: &[f64], h: f64) {
        debug_assert_eq!(pred.len(), self.m);
        self.preds.extend_from_slice(pred);
        self.h.push(h);
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn n_obs(&self) -> usize {
        self.m
    }

    pub fn prediction(&self, i: usize) -> &[f64] {
        &self.preds[i * self.m..(i + 1) * self.m]
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// `Φ_i = ½ ‖L⁻¹G(u_i) − y_w‖²` for whitened data `y_w`.
    pub fn potentials(&self, y_white: &[f64]) -> Vec<f64> {
        self.preds
            .chunks_exact(self.m.max(1))
            .map(|p| half_sq_dist(p, y_white))
            .collect()
    }
}

/// `Z = E_{μ₀} exp(−Φ)` with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceReport {
    pub log_z: f64,
    pub z: f64,
    /// Plain standard error of the sample mean of `exp(−Φ)`.
    pub se: f64,
    pub bootstrap_se: f64,
    /// `(Σw)² / Σw²`.
    pub ess: f64,
    pub n_samples: usize,
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Log-space evidence from per-draw potentials.
pub fn evidence_from_potentials<R: Rng + ?Sized>(phi: &[f64], n_boot: usize, rng: &mut R) -> Result<EvidenceReport> {
    let n = phi.len();
    if n == 0 {
        return Err(invalid("n_samples", "no draws"));
    }
    if phi.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::Domain("potentials must be non-negative".into()));
    }
    let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
    let log_z = log_sum_exp(&neg) - (n as f64).ln();
    let z = log_z.exp();
    if !(z > 0.0) {
        return Err(Error::EvidenceUnderflow { log_z });
    }
    let shift = neg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = neg.iter().map(|v| (v - shift).exp()).collect();
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|v| v * v).sum();
    let ess = sw * sw / sw2;
    let mw = sw / n as f64;
    let var = if n > 1 {
        w.iter().map(|v| (v - mw) * (v - mw)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let scale = shift.exp();
    let se = scale * (var / n as f64).sqrt();
    let mut boots = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let mut s = 0.0;
        for _ in 0..n {
            s += w[rng.random_range(0..n)];
        }
        boots.push(s / n as f64);
    }
    let bootstrap_se = if n_boot > 1 {
        scale * crate::stats::variance(&boots).sqrt()
    } else {
        0.0
    };
    Ok(EvidenceReport {
        log_z,
        z,
        se,
        bootstrap_se,
        ess,
        n_samples: n,
    })
}

/// Prior Monte Carlo estimate of the normalizing constant.
pub fn evidence_estimate(problem: &PosteriorProblem, n_samples: usize, state: &RngState) -> Result<EvidenceReport> {
    if n_samples < 1000 {
        return Err(invalid("n_samples", "need at least 1000 draws"));
    }
    let bank = problem.draw_bank(n_samples, state)?;
    let phi = bank.potentials(&problem.whitened_data());
    let mut rng = state.substream(u64::MAX).rng();
    evidence_from_potentials(&phi, BOOTSTRAP_RESAMPLES, &mut rng)
}
