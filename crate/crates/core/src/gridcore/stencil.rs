use crate::error::{Error, Result};

use super::grid::{CircleGrid, Field};

/// Discrete divergence-form operator f ↦ (σf′)′ + z·f on a periodic grid.
///
/// Row j couples f_{j−1}, f_j, f_{j+1} with interface diffusivities taken as
/// arithmetic means of neighbouring σ values, which keeps the matrix symmetric.
#[derive(Debug, Clone)]
pub struct SlOperator {
    grid: CircleGrid,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    zeroth: Vec<f64>,
    max_zeroth: f64,
}

impl SlOperator {
    pub fn new(sigma: &Field, zeroth: &Field) -> Result<Self> {
        sigma.check_same_grid(zeroth)?;
        if let Some(j) = sigma.values().iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::param("sigma", format!("must be positive, got {} at node {j}", sigma.values()[j])));
        }
        if !zeroth.is_finite() {
            return Err(Error::param("zeroth", "non-finite coefficient"));
        }
        let grid = sigma.grid();
        let n = grid.n();
        let h2 = grid.spacing().powi(2);
        let s = sigma.values();
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for j in 0..n {
            let right = 0.5 * (s[j] + s[(j + 1) % n]) / h2;
            let left = 0.5 * (s[j] + s[(j + n - 1) % n]) / h2;
            lower[j] = left;
            upper[j] = right;
            diag[j] = -(left + right) + zeroth.values()[j];
        }
        Ok(Self { grid, lower, diag, upper, zeroth: zeroth.values().to_vec(), max_zeroth: zeroth.max() })
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        let n = self.grid.n();
        let v = f.values();
        let out = (0..n)
            .map(|j| {
                self.lower[j] * (v[(j + n - 1) % n] - v[j]) + self.upper[j] * (v[(j + 1) % n] - v[j]) + self.zeroth[j] * v[j]
            })
            .collect();
        Field::new(self.grid, out)
    }

    /// Solves (shift·I − scale·L) x = rhs.
    pub fn solve_shifted(&self, shift: f64, scale: f64, rhs: &Field) -> Result<Field> {
        self.check(rhs)?;
        let a: Vec<f64> = self.lower.iter().map(|l| -scale * l).collect();
        let b: Vec<f64> = self.diag.iter().map(|d| shift - scale * d).collect();
        let c: Vec<f64> = self.upper.iter().map(|u| -scale * u).collect();
        Field::new(self.grid, solve_cyclic_tridiagonal(&a, &b, &c, rhs.values())?)
    }

    /// One Crank–Nicolson step of y′ = L y + source.
    ///
    /// The implicit matrix I − (dt/2)L is nonsingular whenever dt·max(z)/2 < 1,
    /// since the diffusion part of L is negative semidefinite.
    pub fn cn_step(&self, y: &Field, source: &Field, dt: f64) -> Result<Field> {
        if !(dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if 0.5 * dt * self.max_zeroth >= 1.0 {
            return Err(Error::Singular(format!(
                "dt = {dt} too large for reaction coefficient {}; need dt < {}",
                self.max_zeroth,
                2.0 / self.max_zeroth
            )));
        }
        self.check(source)?;
        let ly = self.apply(y)?;
        let rhs = Field::new(
            self.grid,
            y.values()
                .iter()
                .zip(ly.values())
                .zip(source.values())
                .map(|((&yj, &lj), &sj)| yj + 0.5 * dt * lj + dt * sj)
                .collect(),
        )?;
        self.solve_shifted(1.0, 0.5 * dt, &rhs)
    }

    fn check(&self, f: &Field) -> Result<()> {
        if f.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "operator on {} nodes applied to field on {}",
                self.grid.n(),
                f.grid().n()
            )));
        }
        Ok(())
    }
}

pub fn sl_apply(sigma: &Field, zeroth: &Field, f: &Field) -> Result<Field> {
    SlOperator::new(sigma, zeroth)?.apply(f)
}

pub fn cn_step(sigma: &Field, zeroth: &Field, y: &Field, source: &Field, dt: f64) -> Result<Field> {
    SlOperator::new(sigma, zeroth)?.cn_step(y, source, dt)
}

/// Fourth-order evaluation of (σf′)′ + z·f by composing centered
/// first-derivative stencils. Independent of [`SlOperator`]; used to measure
/// how well grid solutions satisfy the continuous equations.
pub fn sl_apply_reference(sigma: &Field, zeroth: &Field, f: &Field) -> Result<Field> {
    sigma.check_same_grid(zeroth)?;
    sigma.check_same_grid(f)?;
    let flux = sigma.mul(&derivative4(f))?;
    derivative4(&flux).add(&zeroth.mul(f)?)
}

fn derivative4(f: &Field) -> Field {
    let n = f.grid().n();
    let h = f.grid().spacing();
    let v = f.values();
    let at = |j: isize| v[j.rem_euclid(n as isize) as usize];
    let out = (0..n as isize)
        .map(|j| (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) / (12.0 * h))
        .collect();
    Field::new(f.grid(), out).expect("same length")
}

/// Thomas algorithm for a[i]x[i−1] + b[i]x[i] + c[i]x[i+1] = r[i]; a[0] and c[n−1] ignored.
pub fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = b[0];
    check_pivot(pivot, 0)?;
    cp[0] = c[0] / pivot;
    x[0] = r[0] / pivot;
    for i in 1..n {
        pivot = b[i] - a[i] * cp[i - 1];
        check_pivot(pivot, i)?;
        cp[i] = c[i] / pivot;
        x[i] = (r[i] - a[i] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(x)
}

fn check_pivot(p: f64, i: usize) -> Result<()> {
    if p.abs() < 1e-300 || !p.is_finite() {
        return Err(Error::Singular(format!("zero pivot in row {i}")));
    }
    Ok(())
}

/// Periodic tridiagonal solve: row 0 also couples x[n−1] through a[0] and row
/// n−1 couples x[0] through c[n−1]. Thomas plus a Sherman–Morrison correction.
pub fn solve_cyclic_tridiagonal(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if n < 3 || a.len() != n || c.len() != n || r.len() != n {
        return Err(Error::GridMismatch(format!("cyclic system of size {n}")));
    }
    let alpha = c[n - 1];
    let beta = a[0];
    let gamma = if b[0] != 0.0 { -b[0] } else { -1.0 };
    let mut bb = b.to_vec();
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * beta / gamma;
    let mut x = solve_tridiagonal(a, &bb, c, r)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(a, &bb, c, &u)?;
    let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
    if denom.abs() < 1e-300 {
        return Err(Error::Singular("cyclic correction denominator vanished".into()));
    }
    let fact = (x[0] + beta * x[n - 1] / gamma) / denom;
    for (xi, zi) in x.iter_mut().zip(&z) {
        *xi -= fact * zi;
    }
    Ok(x)
}
