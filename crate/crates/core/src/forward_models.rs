//! Periodic deconvolution with point sampling, and quadratic measurements of
//! point values.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::grid::GridField;

/// `(φ∗u)(t_i) = (1/n) Σ_j φ(t_i − t_j mod 1) u(t_j)`.
pub fn circular_convolve(u: &GridField, kernel: &GridField) -> Result<GridField> {
    let n = u.len();
    if kernel.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: kernel.len(),
        });
    }
    let (uv, kv) = (u.values(), kernel.values());
    let scale = 1.0 / n as f64;
    let out = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, &uj) in uv.iter().enumerate() {
                let d = if i >= j { i - j } else { i + n - j };
                acc += kv[d] * uj;
            }
            acc * scale
        })
        .collect();
    Ok(GridField::new(out))
}

/// Cell index and weight for periodic linear interpolation at `t`.
fn interp_stencil(t: f64, n: usize) -> (usize, usize, f64) {
    let x = (t - t.floor()) * n as f64;
    let fl = x.floor();
    let i0 = (fl as usize) % n;
    (i0, (i0 + 1) % n, x - fl)
}

/// Periodic linear interpolation of a grid field at the given points.
pub fn sample_points(u: &GridField, points: &[f64]) -> Vec<f64> {
    let n = u.len();
    let v = u.values();
    points
        .iter()
        .map(|&t| {
            let (i0, i1, w) = interp_stencil(t, n);
            if w == 0.0 {
                v[i0]
            } else {
                (1.0 - w) * v[i0] + w * v[i1]
            }
        })
        .collect()
}

/// Interpolation operator `S` as a `points × n` matrix.
pub fn sampling_matrix(points: &[f64], n: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(points.len(), n);
    for (r, &t) in points.iter().enumerate() {
        let (i0, i1, w) = interp_stencil(t, n);
        s[(r, i0)] += 1.0 - w;
        s[(r, i1)] += w;
    }
    s
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(invalid("obs_points", "at least one point is required"));
    }
    if let Some(t) = points.iter().find(|t| !(0.0..1.0).contains(*t)) {
        return Err(invalid("obs_points", format!("{t} is outside [0, 1)")));
    }
    let mut s = points.to_vec();
    s.sort_by(f64::total_cmp);
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("obs_points", "points must be distinct"));
    }
    Ok(())
}

/// `m` equispaced points `j / m`.
pub fn equispaced_points(m: usize) -> Vec<f64> {
    (0..m).map(|j| j as f64 / m as f64).collect()
}

/// Periodic Gaussian bump `Σ_{l=-3..3} exp(−(t+l)²/(2w²))`, scaled so the grid
/// mean is 1.
pub fn gaussian_bump_kernel(n: usize, width: f64) -> Result<GridField> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(invalid("kernel_width", "must be positive"));
    }
    if n == 0 {
        return Err(invalid("grid_size", "must be positive"));
    }
    let mut k = GridField::from_fn(n, |t| {
        (-3..=3)
            .map(|l| {
                let d = t + l as f64;
                (-d * d / (2.0 * width * width)).exp()
            })
            .sum()
    });
    let mean = k.values().iter().sum::<f64>() / n as f64;
    for v in k.values_mut() {
        *v /= mean;
    }
    Ok(k)
}

/// `G(u) = S(φ∗u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeconvModel {
    kernel: GridField,
    obs_points: Vec<f64>,
}

impl DeconvModel {
    pub fn new(kernel: GridField, obs_points: Vec<f64>) -> Result<Self> {
        if kernel.is_empty() {
            return Err(invalid("kernel", "empty kernel grid"));
        }
        if kernel.values().iter().any(|v| !v.is_finite()) {
            return Err(invalid("kernel", "non-finite entry"));
        }
        check_points(&obs_points)?;
        Ok(Self { kernel, obs_points })
    }

    /// Gaussian-bump kernel of the given width with `m` equispaced observations.
    pub fn gaussian(n_grid: usize, width: f64, m: usize) -> Result<Self> {
        Self::new(gaussian_bump_kernel(n_grid, width)?, equispaced_points(m))
    }

    pub fn kernel(&self) -> &GridField {
        &self.kernel
    }

    pub fn obs_points(&self) -> &[f64] {
        &self.obs_points
    }

    pub fn grid_size(&self) -> usize {
        self.kernel.len()
    }

    pub fn n_obs(&self) -> usize {
        self.obs_points.len()
    }

    pub fn forward(&self, u: &GridField) -> Result<Vec<f64>> {
        let conv = circular_convolve(u, &self.kernel)?;
        Ok(sample_points(&conv, &self.obs_points))
    }

    /// The forward map as an `m × n_grid` matrix acting on grid values.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.kernel.len();
        let kv = self.kernel.values();
        let scale = 1.0 / n as f64;
        let mut a = DMatrix::zeros(self.obs_points.len(), n);
        for (r, &t) in self.obs_points.iter().enumerate() {
            let (i0, i1, w) = interp_stencil(t, n);
            for (i, wi) in [(i0, 1.0 - w), (i1, w)] {
                if wi == 0.0 {
                    continue;
                }
                for l in 0..n {
                    let d = if i >= l { i - l } else { i + n - l };
                    a[(r, l)] += wi * kv[d] * scale;
                }
            }
        }
        a
    }
}

/// `y_j = (z_jᵀ S u)²` with `S` sampling at `n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadModel {
    sensing: DMatrix<f64>,
    obs_points: Vec<f64>,
}

impl QuadModel {
    /// `sensing` is `m × n`, one sensing vector per row.
    pub fn new(sensing: DMatrix<f64>, obs_points: Vec<f64>) -> Result<Self> {
        check_points(&obs_points)?;
        if sensing.ncols() != obs_points.len() {
            return Err(Error::DimensionMismatch {
                expected: obs_points.len(),
                got: sensing.ncols(),
            });
        }
        if sensing.nrows() == 0 {
            return Err(invalid("sensing_vectors", "at least one vector is required"));
        }
        if sensing.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sensing_vectors", "non-finite entry"));
        }
        Ok(Self {
            sensing,
            obs_points,
        })
    }

    /// `m` sensing vectors with i.i.d. `N(0, 1/n)` entries over `n` equispaced points.
    pub fn random<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n_points", "must be positive"));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let z = DMatrix::from_fn(m, n, |_, _| {
            let g: f64 = StandardNormal.sample(rng);
            g * scale
        });
        Self::new(z, equispaced_points(n))
    }

    pub fn sensing(&self) -> &DMatrix<f64> {
        &self.sensing
    }

    pub fn obs_points(&self) -> &[f64] {
        &self.obs_points
    }

    pub fn n_obs(&self) -> usize {
        self.sensing.nrows()
    }

    fn inner(&self, u: &GridField) -> Vec<f64> {
        let s = sample_points(u, &self.obs_points);
        (0..self.sensing.nrows())
            .map(|j| {
                self.sensing
                    .row(j)
                    .iter()
                    .zip(&s)
                    .map(|(z, v)| z * v)
                    .sum()
            })
            .collect()
    }

    pub fn forward(&self, u: &GridField) -> Vec<f64> {
        self.inner(u).into_iter().map(|v| v * v).collect()
    }

    /// `Z S` as an `m × n_grid` matrix; `G(u)_j` is the square of row `j` applied to `u`.
    pub fn inner_matrix(&self, n_grid: usize) -> DMatrix<f64> {
        &self.sensing * sampling_matrix(&self.obs_points, n_grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForwardModel {
    Deconv(DeconvModel),
    Quadratic(QuadModel),
}

impl ForwardModel {
    pub fn n_obs(&self) -> usize {
        match self {
            Self::Deconv(d) => d.n_obs(),
            Self::Quadratic(q) => q.n_obs(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Deconv(_))
    }

    /// Required grid size, if the model fixes one.
    pub fn grid_size(&self) -> Option<usize> {
        match self {
            Self::Deconv(d) => Some(d.grid_size()),
            Self::Quadratic(_) => None,
        }
    }

    pub fn forward(&self, u: &GridField) -> Result<Vec<f64>> {
        match self {
            Self::Deconv(d) => d.forward(u),
            Self::Quadratic(q) => Ok(q.forward(u)),
        }
    }

    /// Growth profile `f̃`: `x` for the linear model, `x²` for the quadratic one.
    pub fn growth(&self, x: f64) -> f64 {
        if self.is_linear() {
            x
        } else {
            x * x
        }
    }

    /// Pre-image matrix on an `n_grid` grid: the model is `u ↦ Bu` (linear) or
    /// `u ↦ (Bu)²` componentwise (quadratic).
    pub fn inner_matrix(&self, n_grid: usize) -> Result<DMatrix<f64>> {
        match self {
            Self::Deconv(d) => {
                if d.grid_size() != n_grid {
                    return Err(Error::DimensionMismatch {
                        expected: d.grid_size(),
                        got: n_grid,
                    });
                }
                Ok(d.matrix())
            }
            Self::Quadratic(q) => Ok(q.inner_matrix(n_grid)),
        }
    }
}

/// Empirical Lipschitz and growth ratios over random pairs in a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub radius: f64,
    pub n_pairs: usize,
    /// `max ‖G(u1) − G(u2)‖₂ / ‖u1 − u2‖`.
    pub max_lipschitz: f64,
    /// `max ‖G(u)‖₂ / f̃(‖u‖)`.
    pub max_growth: f64,
}

fn random_in_ball<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> GridField {
    let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect();
    let g = GridField::new(g);
    let norm = g.l2_norm();
    let r = radius * rng.random::<f64>();
    g.scale(r / norm)
}

/// Norms are the grid `L²` norm on `u` and the Euclidean norm on `G(u)`.
pub fn lipschitz_diagnostic<R: Rng + ?Sized>(
    model: &ForwardModel,
    n_grid: usize,
    radius: f64,
    n_pairs: usize,
    rng: &mut R,
) -> Result<LipschitzReport> {
    if !(radius > 0.0) {
        return Err(invalid("radius", "must be positive"));
    }
    if n_grid == 0 {
        return Err(invalid("grid_size", "must be positive"));
    }
    let euclid = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut max_lip: f64 = 0.0;
    let mut max_growth: f64 = 0.0;
    for _ in 0..n_pairs {
        let u1 = random_in_ball(n_grid, radius, rng);
        let u2 = random_in_ball(n_grid, radius, rng);
        let g1 = model.forward(&u1)?;
        let g2 = model.forward(&u2)?;
        let diff: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a - b).collect();
        let du = u1.add(&u2.scale(-1.0))?.l2_norm();
        if du > 0.0 {
            max_lip = max_lip.max(euclid(&diff) / du);
        }
        for (u, g) in [(&u1, &g1), (&u2, &g2)] {
            let f = model.growth(u.l2_norm());
            if f > 0.0 {
                max_growth = max_growth.max(euclid(g) / f);
            }
        }
    }
    Ok(LipschitzReport {
        radius,
        n_pairs,
        max_lipschitz: max_lip,
        max_growth,
    })
}
