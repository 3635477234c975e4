use crate::error::{Error, Result};

/// Uniform grid on the age interval [0, s̄] with `cells` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeGrid {
    sbar: f64,
    cells: usize,
}

impl AgeGrid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(sbar: f64, cells: usize) -> Result<Self> {
        if !(sbar > 0.0) || !sbar.is_finite() {
            return Err(Error::param("sbar", format!("must be positive and finite, got {sbar}")));
        }
        if cells < Self::MIN_CELLS {
            return Err(Error::TooCoarse { what: "age cells", min: Self::MIN_CELLS, got: cells });
        }
        Ok(Self { sbar, cells })
    }

    pub fn sbar(&self) -> f64 {
        self.sbar
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.sbar / self.cells as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.cells).map(|k| self.node(k))
    }

    pub fn refined(&self) -> Self {
        Self { sbar: self.sbar, cells: 2 * self.cells }
    }
}

/// Function of age sampled at the `cells + 1` nodes of an [`AgeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct AgeField {
    grid: AgeGrid,
    values: Vec<f64>,
}

impl AgeField {
    pub fn new(grid: AgeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() + 1 {
            return Err(Error::GridMismatch(format!(
                "{} values for an age grid of {} cells",
                values.len(),
                grid.cells()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: AgeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.nodes().map(f).collect() }
    }

    pub fn constant(grid: AgeGrid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.cells() + 1] }
    }

    pub fn grid(&self) -> AgeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn at_zero(&self) -> f64 {
        self.values[0]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &AgeField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() })
    }

    pub fn add(&self, other: &AgeField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_same_grid(&self, other: &AgeField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "age fields with {} and {} cells",
                self.grid.cells(),
                other.grid.cells()
            )));
        }
        Ok(())
    }

    /// Trapezoid quadrature over [0, s̄].
    pub fn integral(&self) -> f64 {
        let n = self.values.len();
        let inner: f64 = self.values[1..n - 1].iter().sum();
        self.grid.spacing() * (inner + 0.5 * (self.values[0] + self.values[n - 1]))
    }

    pub fn inner(&self, other: &AgeField) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| a * b)?.integral())
    }

    /// Second-order finite-difference derivative (one-sided at the ends).
    pub fn derivative(&self) -> Self {
        let h = self.grid.spacing();
        let v = &self.values;
        let n = v.len();
        let d = (0..n)
            .map(|k| {
                if k == 0 {
                    (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
                } else if k == n - 1 {
                    (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h)
                } else {
                    (v[k + 1] - v[k - 1]) / (2.0 * h)
                }
            })
            .collect();
        Self { grid: self.grid, values: d }
    }

    /// Linear interpolation at age `s`, clamped to [0, s̄].
    pub fn interpolate(&self, s: f64) -> f64 {
        let h = self.grid.spacing();
        let x = (s / h).clamp(0.0, self.grid.cells() as f64);
        let k = (x.floor() as usize).min(self.grid.cells() - 1);
        let w = x - k as f64;
        (1.0 - w) * self.values[k] + w * self.values[k + 1]
    }
}
