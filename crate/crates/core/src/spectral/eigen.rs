use crate::error::{Error, Result};
use crate::gridcore::{inner_product, CircleGrid, Field, SlOperator};

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda0: f64,
    /// Unit L² norm, strictly positive.
    pub e0: Field,
    pub residual: f64,
}

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
const ITERATION_CAP: usize = 10_000;

/// Largest eigenvalue and positive eigenvector of f ↦ f″ + A·f on the grid.
///
/// Shifted inverse power iteration with shift sup A + 1, which lies strictly
/// above the spectrum. Stops when the Rayleigh residual ‖Le − λe‖ drops
/// below `tol`.
pub fn principal_eigenpair(a_coeff: &Field, grid: CircleGrid, tol: f64) -> Result<EigenPair> {
    if a_coeff.grid() != grid {
        return Err(Error::GridMismatch("coefficient not sampled on the requested grid".into()));
    }
    if !a_coeff.is_finite() {
        return Err(Error::param("A", "non-finite coefficient"));
    }
    let op = SlOperator::new(&Field::constant(grid, 1.0), a_coeff)?;
    let shift = a_coeff.max() + 1.0;
    let mut v = normalize(&Field::constant(grid, 1.0))?;
    let mut residual = f64::INFINITY;
    for _ in 0..ITERATION_CAP {
        let w = op.solve_shifted(shift, 1.0, &v)?;
        v = normalize(&w)?;
        let lv = op.apply(&v)?;
        let lambda = inner_product(&v, &lv)?;
        residual = lv.zip_with(&v, |a, b| a - lambda * b)?.l2_norm();
        if residual < tol {
            if inner_product(&v, &Field::constant(grid, 1.0))? < 0.0 {
                v = v.scale(-1.0);
            }
            if v.min() <= 0.0 {
                return Err(Error::Domain(format!("principal eigenvector not positive (min {})", v.min())));
            }
            return Ok(EigenPair { lambda0: lambda, e0: v, residual });
        }
    }
    Err(Error::NoConvergence { iterations: ITERATION_CAP, residual })
}

fn normalize(f: &Field) -> Result<Field> {
    let norm = f.l2_norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Singular("iterate vanished during inverse iteration".into()));
    }
    Ok(f.scale(1.0 / norm))
}
