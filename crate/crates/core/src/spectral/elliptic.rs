use crate::error::{Error, Result};
use crate::gridcore::{Field, SlOperator};

/// Solves (ρ − 𝒜)α = w for 𝒜φ = (σφ′)′ − δφ.
///
/// With ρ > 0 and δ ≥ 0 the matrix ρI − L is symmetric and strictly
/// diagonally dominant, so the solve cannot be singular.
pub fn solve_elliptic(rho: f64, sigma: &Field, delta: &Field, w: &Field) -> Result<Field> {
    if !(rho > 0.0) {
        return Err(Error::param("rho", format!("must be positive, got {rho}")));
    }
    if delta.min() < 0.0 {
        return Err(Error::param("delta", format!("must be nonnegative, min {}", delta.min())));
    }
    let op = SlOperator::new(sigma, &delta.scale(-1.0))?;
    op.solve_shifted(rho, 1.0, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridcore::CircleGrid;

    #[test]
    fn constant_coefficients() {
        let g = CircleGrid::new(64).unwrap();
        let a = solve_elliptic(0.05, &Field::constant(g, 0.7), &Field::constant(g, 0.1), &Field::constant(g, 1.0)).unwrap();
        assert!(a.values().iter().all(|v| (v - 1.0 / 0.15).abs() < 1e-10));
    }

    #[test]
    fn positive_source_gives_positive_solution() {
        let g = CircleGrid::new(128).unwrap();
        let sigma = Field::from_fn(g, |t| 0.5 + 0.2 * t.cos());
        let w = Field::from_fn(g, |t| 1.0 + 0.9 * t.sin());
        let a = solve_elliptic(0.05, &sigma, &Field::constant(g, 0.0), &w).unwrap();
        assert!(a.min() > 0.0);
    }

    #[test]
    fn round_trip() {
        let g = CircleGrid::new(64).unwrap();
        let sigma = Field::from_fn(g, |t| 1.0 + 0.3 * (2.0 * t).sin());
        let delta = Field::from_fn(g, |t| 0.1 + 0.05 * t.cos());
        let w = Field::from_fn(g, |t| 2.0 + t.sin());
        let a = solve_elliptic(0.07, &sigma, &delta, &w).unwrap();
        let la = SlOperator::new(&sigma, &delta.scale(-1.0)).unwrap().apply(&a).unwrap();
        let back = a.scale(0.07).sub(&la).unwrap();
        assert!(back.sub(&w).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn manufactured_solution() {
        let err = |n: usize| {
            let g = CircleGrid::new(n).unwrap();
            let rho = 0.05;
            let w = Field::from_fn(g, |t| rho * (2.0 + t.cos()) + t.cos());
            let a = solve_elliptic(rho, &Field::constant(g, 1.0), &Field::constant(g, 0.0), &w).unwrap();
            g.nodes().zip(a.values()).map(|(t, v)| (v - 2.0 - t.cos()).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 < 1e-2);
        assert!(e1 / e2 > 3.5);
    }
}
