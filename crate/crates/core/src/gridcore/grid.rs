use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Uniform periodic grid on the circle with nodes θ_j = 2πj/n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircleGrid {
    n: usize,
}

impl CircleGrid {
    pub const MIN_NODES: usize = 8;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_NODES {
            return Err(Error::TooCoarse { what: "circle grid nodes", min: Self::MIN_NODES, got: n });
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        TAU * (j % self.n) as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.node(j))
    }

    /// Same grid with twice as many nodes.
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n }
    }
}

/// Real function sampled on a [`CircleGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: CircleGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: CircleGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: CircleGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn constant(grid: CircleGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.n()] }
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| k * v)
    }

    pub fn add(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "fields on grids of {} and {} nodes",
                self.grid.n(),
                other.grid.n()
            )));
        }
        Ok(())
    }

    pub fn l2_norm(&self) -> f64 {
        quad_circle(&self.map(|v| v * v)).sqrt()
    }
}

/// Rectangle rule h·Σ f(θ_j); spectrally accurate for smooth periodic integrands.
pub fn quad_circle(f: &Field) -> f64 {
    f.grid.spacing() * f.values.iter().sum::<f64>()
}

pub fn inner_product(f: &Field, g: &Field) -> Result<f64> {
    f.check_same_grid(g)?;
    let s: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(f.grid.spacing() * s)
}
