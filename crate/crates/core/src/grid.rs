//! Uniformly sampled fields on the unit circle and the unit square.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Field sampled at the nodes `t_i = i / n`, `i = 0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            values: vec![value; n],
        }
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(n: usize, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            values: (0..n).map(|i| f(i as f64 / n as f64)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.values.len() as f64
    }

    /// Grid approximation of the `L²` norm: `sqrt(mean u_i²)`.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_squared().sqrt()
    }

    pub fn l2_norm_squared(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ |u_{i+1} - u_i|` over consecutive nodes (no wrap-around).
    pub fn discrete_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(GridField::new(
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn scale(&self, factor: f64) -> GridField {
        GridField::new(self.values.iter().map(|v| v * factor).collect())
    }
}

/// `n × n` field on the unit square, row-major, node `(i, j)` at
/// `(x, y) = (j h, i h)` with `h = 1/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField2D {
    n: usize,
    values: Vec<f64>,
}

impl GridField2D {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let h = 1.0 / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(j as f64 * h, i as f64 * h));
            }
        }
        Self { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl FnMut(&f64) -> f64) -> GridField2D {
        GridField2D {
            n: self.n,
            values: self.values.iter().map(f).collect(),
        }
    }

    /// Anisotropic surrogate `Σ h (|Δ_x u| + |Δ_y u|)` with forward differences.
    pub fn discrete_variation(&self) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let u = self.get(i, j);
                if j + 1 < n {
                    total += (self.get(i, j + 1) - u).abs();
                }
                if i + 1 < n {
                    total += (self.get(i + 1, j) - u).abs();
                }
            }
        }
        total * self.spacing()
    }
}
