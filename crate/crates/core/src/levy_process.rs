//! Sample paths of compound Poisson processes, squared-exponential Gaussian
//! processes, their sum, and the level-set jump field on the unit square.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::distributions::{poisson_count, JumpLaw};
use crate::error::{invalid, Error, Result};
use crate::grid::{GridField, GridField2D};

/// Piecewise-constant càdlàg path on `[0, 1]`: `u(0) = 0` and
/// `u(t) = Σ_{τ_k ≤ t} ξ_k`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JumpPath {
    times: Vec<f64>,
    sizes: Vec<f64>,
}

impl JumpPath {
    pub fn new(times: Vec<f64>, sizes: Vec<f64>) -> Result<Self> {
        if times.len() != sizes.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: sizes.len(),
            });
        }
        if times.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(invalid("jump_times", "must lie in (0, 1]"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("jump_times", "must be strictly increasing"));
        }
        if sizes.iter().any(|s| !s.is_finite()) {
            return Err(invalid("jump_sizes", "must be finite"));
        }
        Ok(Self { times, sizes })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn jump_count(&self) -> usize {
        self.times.len()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        self.sizes[..k].iter().sum()
    }

    /// Values taken on `[0,1]`: `0, ξ_1, ξ_1 + ξ_2, …`.
    pub fn levels(&self) -> Vec<f64> {
        let mut levels = Vec::with_capacity(self.sizes.len() + 1);
        let mut acc = 0.0;
        levels.push(acc);
        for s in &self.sizes {
            acc += s;
            levels.push(acc);
        }
        levels
    }

    /// Total variation `Σ |ξ_k|`.
    pub fn tv(&self) -> f64 {
        self.sizes.iter().map(|s| s.abs()).sum()
    }

    /// `sup_t |u(t)|`.
    pub fn sup_norm(&self) -> f64 {
        self.levels().into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Values at the `n` circle nodes `i / n`.
    pub fn rasterize(&self, n: usize) -> GridField {
        GridField::new(self.raster_values(n, n))
    }

    /// Values at the `n + 1` nodes `i / n`, `i = 0..=n`, including `t = 1`.
    pub fn rasterize_closed(&self, n: usize) -> GridField {
        GridField::new(self.raster_values(n, n + 1))
    }

    fn raster_values(&self, n: usize, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        let mut k = 0;
        let mut acc = 0.0;
        for i in 0..count {
            let t = i as f64 / n as f64;
            while k < self.times.len() && self.times[k] <= t {
                acc += self.sizes[k];
                k += 1;
            }
            out.push(acc);
        }
        out
    }
}

/// Compound Poisson path with intensity `rate` and jumps from `law`.
///
/// The jump count is Poisson(rate); jump times are the order statistics of
/// i.i.d. uniforms on `(0, 1]`.
pub fn sample_cpp_path<R: Rng + ?Sized>(rate: f64, law: &JumpLaw, rng: &mut R) -> Result<JumpPath> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::Domain(format!("rate must be finite and non-negative, got {rate}")));
    }
    law.validate()?;
    let count = poisson_count(rate, rng) as usize;
    let mut times: Vec<f64> = Vec::with_capacity(count);
    while times.len() < count {
        let t = 1.0 - rng.random::<f64>();
        if !times.contains(&t) {
            times.push(t);
        }
    }
    times.sort_by(|a, b| a.total_cmp(b));
    let sizes = (0..count).map(|_| law.draw(rng)).collect();
    Ok(JumpPath { times, sizes })
}

/// `path` with its jumps in `(a, b]` replaced by a fresh draw of the
/// process restricted to that window.
///
/// Increments over disjoint windows are independent, so this proposal leaves
/// the prior invariant.
pub fn resample_window<R: Rng + ?Sized>(
    path: &JumpPath,
    a: f64,
    b: f64,
    rate: f64,
    law: &JumpLaw,
    rng: &mut R,
) -> Result<JumpPath> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(invalid("window", format!("need 0 <= a < b <= 1, got ({a}, {b}]")));
    }
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::Domain(format!("rate must be finite and non-negative, got {rate}")));
    }
    law.validate()?;
    let count = poisson_count(rate * (b - a), rng) as usize;
    let mut fresh: Vec<f64> = Vec::with_capacity(count);
    while fresh.len() < count {
        let t = a + (b - a) * (1.0 - rng.random::<f64>());
        if t > a && t <= b && !fresh.contains(&t) {
            fresh.push(t);
        }
    }
    let mut jumps: Vec<(f64, f64)> = path
        .times
        .iter()
        .zip(&path.sizes)
        .filter(|(t, _)| !(**t > a && **t <= b))
        .map(|(t, s)| (*t, *s))
        .collect();
    jumps.extend(fresh.into_iter().map(|t| (t, law.draw(rng))));
    jumps.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(JumpPath {
        times: jumps.iter().map(|j| j.0).collect(),
        sizes: jumps.iter().map(|j| j.1).collect(),
    })
}

pub const DEFAULT_JITTER: f64 = 1e-10;
pub const MAX_JITTER: f64 = 1e-6;
pub const MAX_GRID_1D: usize = 4096;
pub const MAX_GRID_2D: usize = 64;

/// Gaussian process with kernel `exp(-b |r - s|²)` on the nodes `i / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpSpec {
    pub bandwidth: f64,
    pub n: usize,
    pub jitter: f64,
    /// Constant mean added to every draw.
    pub mean: f64,
}

impl GpSpec {
    pub fn new(bandwidth: f64, n: usize) -> Self {
        Self {
            bandwidth,
            n,
            jitter: DEFAULT_JITTER,
            mean: 0.0,
        }
    }

    pub fn with_mean(self, mean: f64) -> Self {
        Self { mean, ..self }
    }

    pub fn kernel(&self, r: f64, s: f64) -> f64 {
        (-self.bandwidth * (r - s) * (r - s)).exp()
    }

    fn validate(&self, max_n: usize) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(invalid("bandwidth", "must be positive"));
        }
        if self.n == 0 || self.n > max_n {
            return Err(invalid("n", format!("grid size must be in 1..={max_n}")));
        }
        if !(self.jitter > 0.0 && self.jitter <= MAX_JITTER) {
            return Err(invalid("jitter", format!("must be in (0, {MAX_JITTER:e}]")));
        }
        Ok(())
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let h = 1.0 / self.n as f64;
        DMatrix::from_fn(self.n, self.n, |i, j| self.kernel(i as f64 * h, j as f64 * h))
    }
}

/// Lower Cholesky factor of `K + εI`, raising `ε` tenfold until it succeeds.
fn factor_with_jitter(k: &DMatrix<f64>, start: f64) -> Result<(DMatrix<f64>, f64)> {
    let mut jitter = start;
    loop {
        let mut m = k.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = m.cholesky() {
            return Ok((chol.l(), jitter));
        }
        if jitter >= MAX_JITTER {
            return Err(Error::Factorization { jitter });
        }
        jitter = (jitter * 10.0).min(MAX_JITTER);
    }
}

/// Cached factorization for repeated 1D draws.
#[derive(Debug, Clone)]
pub struct GpSampler {
    spec: GpSpec,
    factor: DMatrix<f64>,
    jitter: f64,
}

impl GpSampler {
    pub fn new(spec: GpSpec) -> Result<Self> {
        spec.validate(MAX_GRID_1D)?;
        let (factor, jitter) = factor_with_jitter(&spec.covariance(), spec.jitter)?;
        Ok(Self { spec, factor, jitter })
    }

    pub fn spec(&self) -> &GpSpec {
        &self.spec
    }

    /// Jitter that made the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GridField {
        let n = self.spec.n;
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let g = &self.factor * z;
        GridField::new(g.iter().map(|v| v + self.spec.mean).collect())
    }
}

/// Draws on the `n × n` square grid.
///
/// The kernel factorizes over coordinates, so the covariance is `K ⊗ K` and
/// a draw is `L Z Lᵀ` with `L` the 1D factor and `Z` white noise.
#[derive(Debug, Clone)]
pub struct GpSampler2D {
    spec: GpSpec,
    factor: DMatrix<f64>,
    jitter: f64,
}

impl GpSampler2D {
    pub fn new(spec: GpSpec) -> Result<Self> {
        spec.validate(MAX_GRID_2D)?;
        let (factor, jitter) = factor_with_jitter(&spec.covariance(), spec.jitter)?;
        Ok(Self { spec, factor, jitter })
    }

    pub fn spec(&self) -> &GpSpec {
        &self.spec
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GridField2D {
        let n = self.spec.n;
        let z = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        // rows index y, columns index x
        let g = &self.factor * z * self.factor.transpose();
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(g[(i, j)] + self.spec.mean);
            }
        }
        GridField2D::new(n, values).expect("n × n values")
    }
}

/// Gaussian process plus an independent compound Poisson path.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDraw {
    pub smooth: GridField,
    pub jumps: JumpPath,
    pub field: GridField,
}

pub fn sample_hybrid_path<R: Rng + ?Sized>(
    gp: &GpSampler,
    rate: f64,
    law: &JumpLaw,
    rng: &mut R,
) -> Result<HybridDraw> {
    let smooth = gp.sample(rng);
    let jumps = sample_cpp_path(rate, law, rng)?;
    let field = smooth.add(&jumps.rasterize(gp.spec().n))?;
    Ok(HybridDraw { smooth, jumps, field })
}

/// Field `u(t) = S_{τ(g⁺(t))}` built from one Poisson arrival stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BvFieldDraw {
    pub gp: GridField2D,
    /// Arrival levels `0 < a_1 < a_2 < … ≤ max g⁺`.
    pub arrivals: Vec<f64>,
    /// Partial sums `S_0 = 0, S_1, …, S_τ(M)`.
    pub partial_sums: Vec<f64>,
    pub field: GridField2D,
}

impl BvFieldDraw {
    /// `τ(max g⁺)`.
    pub fn arrival_count(&self) -> usize {
        self.arrivals.len()
    }

    /// Arrivals strictly above the smallest grid value of `g⁺`; only these
    /// produce level-set jumps on the grid.
    pub fn active_arrival_count(&self) -> usize {
        let floor = self.gp.values().iter().fold(f64::INFINITY, |m, &v| m.min(v.max(0.0)));
        self.arrivals.iter().filter(|&&a| a > floor).count()
    }

    /// Number of distinct counts `τ(g⁺)` attained at grid nodes.
    pub fn occupied_level_count(&self) -> usize {
        let mut counts: Vec<usize> = self
            .gp
            .values()
            .iter()
            .map(|&v| self.arrivals.partition_point(|&a| a <= v.max(0.0)))
            .collect();
        counts.sort_unstable();
        counts.dedup();
        counts.len()
    }

    pub fn distinct_value_count(&self) -> usize {
        let mut vals = self.field.values().to_vec();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals.dedup();
        vals.len()
    }
}

pub fn sample_bv_field_2d<R: Rng + ?Sized>(
    gp: &GpSampler2D,
    rate: f64,
    law: &JumpLaw,
    rng: &mut R,
) -> Result<BvFieldDraw> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::Domain(format!("rate must be finite and non-negative, got {rate}")));
    }
    law.validate()?;
    let g = gp.sample(rng);
    let top = g.max().max(0.0);
    let mut arrivals = Vec::new();
    if rate > 0.0 {
        let mut a = 0.0;
        loop {
            let gap: f64 = rng.sample(Exp1);
            a += gap / rate;
            if a > top {
                break;
            }
            arrivals.push(a);
        }
    }
    let mut partial_sums = Vec::with_capacity(arrivals.len() + 1);
    partial_sums.push(0.0);
    let mut acc = 0.0;
    for _ in &arrivals {
        acc += law.draw(rng);
        partial_sums.push(acc);
    }
    let field = g.map(|&v| {
        let count = arrivals.partition_point(|&a| a <= v.max(0.0));
        partial_sums[count]
    });
    Ok(BvFieldDraw {
        gp: g,
        arrivals,
        partial_sums,
        field,
    })
}

/// Length of the contour `{g = level}` by marching squares with linear
/// interpolation along cell edges.
pub fn level_set_perimeter(field: &GridField2D, level: f64) -> f64 {
    let n = field.n();
    let h = field.spacing();
    let mut length = 0.0;
    for i in 0..n.saturating_sub(1) {
        for j in 0..n.saturating_sub(1) {
            // corners counter-clockwise from bottom-left: (x, y, value)
            let corners = [
                (j as f64 * h, i as f64 * h, field.get(i, j) - level),
                ((j + 1) as f64 * h, i as f64 * h, field.get(i, j + 1) - level),
                ((j + 1) as f64 * h, (i + 1) as f64 * h, field.get(i + 1, j + 1) - level),
                (j as f64 * h, (i + 1) as f64 * h, field.get(i + 1, j) - level),
            ];
            let inside = corners.map(|c| c.2 >= 0.0);
            // crossing on edge e joins corner e and corner e+1
            let mut cross: [Option<(f64, f64)>; 4] = [None; 4];
            for e in 0..4 {
                let (a, b) = (corners[e], corners[(e + 1) % 4]);
                if inside[e] != inside[(e + 1) % 4] {
                    let t = a.2 / (a.2 - b.2);
                    cross[e] = Some((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
                }
            }
            let seg = |p: Option<(f64, f64)>, q: Option<(f64, f64)>| match (p, q) {
                (Some(p), Some(q)) => ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt(),
                _ => 0.0,
            };
            match cross.iter().filter(|c| c.is_some()).count() {
                2 => {
                    let pts: Vec<(f64, f64)> = cross.iter().flatten().copied().collect();
                    length += seg(Some(pts[0]), Some(pts[1]));
                }
                4 => {
                    let center = corners.iter().map(|c| c.2).sum::<f64>() / 4.0 >= 0.0;
                    // cut off the corners whose side differs from the center
                    for c in 0..4 {
                        if inside[c] != center {
                            // corner c touches edges c-1 and c
                            length += seg(cross[(c + 3) % 4], cross[c]);
                        }
                    }
                }
                _ => {}
            }
        }
    }
    length
}
