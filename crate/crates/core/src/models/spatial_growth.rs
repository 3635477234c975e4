//! Spatial AK growth on the circle with Benthamite CRRA utility.

use crate::control::{rollout_optimal, ControlledModel, OnDomainExit};
use crate::error::{Error, Result};
use crate::gridcore::{inner_product, quad_circle, sl_apply_reference, CircleGrid, Field, SlOperator, Trajectory};
use crate::spectral::{principal_eigenpair, EigenPair, DEFAULT_EIGEN_TOL};

pub const FINITENESS: &str = "spatial finiteness assumption (rho > lambda0*(1 - sigma))";

#[derive(Debug, Clone)]
pub struct SpatialGrowthSpec {
    pub a_coeff: Field,
    pub n_pop: Field,
    pub sigma: f64,
    pub rho: f64,
    pub eigen: EigenPair,
    pub alpha0: f64,
    /// β = α₀e₀.
    pub beta: Field,
    beta_pow: Field,
    op: SlOperator,
}

pub fn build_spatial_spec(a_coeff: Field, n_pop: Field, sigma: f64, rho: f64, grid: CircleGrid) -> Result<SpatialGrowthSpec> {
    if a_coeff.grid() != grid || n_pop.grid() != grid {
        return Err(Error::GridMismatch("coefficients must be sampled on the model grid".into()));
    }
    if !a_coeff.is_finite() {
        return Err(Error::param("A", "non-finite values"));
    }
    if !(n_pop.min() > 0.0) || !n_pop.is_finite() {
        return Err(Error::param("N", format!("population density must be positive, min {}", n_pop.min())));
    }
    check_crra(sigma)?;
    if !(rho > 0.0) {
        return Err(Error::param("rho", format!("must be positive, got {rho}")));
    }
    let eigen = principal_eigenpair(&a_coeff, grid, DEFAULT_EIGEN_TOL)?;
    let margin = rho - eigen.lambda0 * (1.0 - sigma);
    if !(margin > 0.0) {
        return Err(Error::assumption(
            FINITENESS,
            format!("rho = {rho}, lambda0*(1 - sigma) = {}", eigen.lambda0 * (1.0 - sigma)),
        ));
    }
    let weight = quad_circle(&eigen.e0.map(|e| e.powf(1.0 - 1.0 / sigma)).mul(&n_pop)?);
    let alpha0 = (sigma / margin * weight).powf(sigma / (1.0 - sigma));
    let beta = eigen.e0.scale(alpha0);
    let beta_pow = beta.map(|b| b.powf(-1.0 / sigma));
    let op = SlOperator::new(&Field::constant(grid, 1.0), &a_coeff)?;
    Ok(SpatialGrowthSpec { a_coeff, n_pop, sigma, rho, eigen, alpha0, beta, beta_pow, op })
}

pub(crate) fn check_crra(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || sigma == 1.0 || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("CRRA coefficient must be positive and != 1, got {sigma}")));
    }
    Ok(())
}

pub(crate) fn crra(c: f64, sigma: f64) -> f64 {
    c.powf(1.0 - sigma) / (1.0 - sigma)
}

impl SpatialGrowthSpec {
    pub fn grid(&self) -> CircleGrid {
        self.beta.grid()
    }

    /// ⟨x, β⟩, required positive.
    pub fn pairing(&self, x: &Field) -> Result<f64> {
        let p = inner_product(x, &self.beta)?;
        if !(p > 0.0) {
            return Err(Error::Domain(format!("<x, beta> = {p} <= 0")));
        }
        Ok(p)
    }

    /// Balanced growth rate (λ₀ − ρ)/σ of ⟨y, β⟩ along the optimal path.
    pub fn growth_rate(&self) -> f64 {
        (self.eigen.lambda0 - self.rho) / self.sigma
    }

    fn utility(&self, c: &Field) -> Result<f64> {
        if c.min() < 0.0 {
            return Err(Error::Domain(format!("negative consumption {}", c.min())));
        }
        Ok(quad_circle(&c.map(|v| crra(v, self.sigma)).mul(&self.n_pop)?))
    }
}

pub fn value_spatial(spec: &SpatialGrowthSpec, x: &Field) -> Result<f64> {
    Ok(crra(spec.pairing(x)?, spec.sigma))
}

/// c*(θ) = ⟨x, β⟩ β(θ)^{−1/σ}.
pub fn feedback_spatial(spec: &SpatialGrowthSpec, x: &Field) -> Result<Field> {
    Ok(spec.beta_pow.scale(spec.pairing(x)?))
}

/// Relative HJB defect at `x`, with the generator evaluated by the
/// fourth-order reference stencil.
pub fn hjb_residual_spatial(spec: &SpatialGrowthSpec, x: &Field) -> Result<f64> {
    let p = spec.pairing(x)?;
    let dv = spec.beta.scale(p.powf(-spec.sigma));
    let grid = spec.grid();
    let lhs = spec.rho * crra(p, spec.sigma);
    let generator = inner_product(x, &sl_apply_reference(&Field::constant(grid, 1.0), &spec.a_coeff, &dv)?)?;
    let c = feedback_spatial(spec, x)?;
    let hamiltonian = spec.utility(&c)? - inner_product(&c.mul(&spec.n_pop)?, &dv)?;
    let scale = lhs.abs().max(generator.abs()).max(hamiltonian.abs());
    Ok((lhs - generator - hamiltonian).abs() / scale)
}

impl ControlledModel for SpatialGrowthSpec {
    type State = Field;
    type Control = Field;

    fn discount(&self) -> f64 {
        self.rho
    }

    fn value(&self, state: &Field) -> Result<f64> {
        value_spatial(self, state)
    }

    fn feedback(&self, state: &Field) -> Result<Field> {
        feedback_spatial(self, state)
    }

    fn step(&self, state: &Field, control: &Field, next_control: &Field, dt: f64) -> Result<Field> {
        let drain = control.add(next_control)?.mul(&self.n_pop)?.scale(-0.5);
        self.op.cn_step(state, &drain, dt)
    }

    fn running_payoff(&self, _state: &Field, control: &Field) -> Result<f64> {
        self.utility(control)
    }

    fn domain_check(&self, state: &Field) -> std::result::Result<(), String> {
        self.pairing(state).map(|_| ()).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct SpatialRun {
    pub trajectory: Trajectory<Field, Field>,
    pub min_state: f64,
    /// First time some y(t, θ) < 0; the run is then not admissible.
    pub first_negative: Option<f64>,
}

/// Closed-loop simulation. Crank–Nicolson in the linear part, consumption
/// drain averaged over the step ends and solved self-consistently.
pub fn simulate_spatial(spec: &SpatialGrowthSpec, x0: &Field, t_end: f64, dt: f64) -> Result<SpatialRun> {
    if x0.min() < 0.0 {
        return Err(Error::param("x0", format!("initial capital must be nonnegative, min {}", x0.min())));
    }
    spec.pairing(x0)?;
    let trajectory = rollout_optimal(spec, x0, t_end, dt, OnDomainExit::Abort)?;
    let mut min_state = f64::INFINITY;
    let mut first_negative = None;
    for (t, y) in trajectory.times.iter().zip(&trajectory.states) {
        let m = y.min();
        min_state = min_state.min(m);
        if m < 0.0 && first_negative.is_none() {
            first_negative = Some(*t);
        }
    }
    Ok(SpatialRun { trajectory, min_state, first_negative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::golden_section_max;
    use std::f64::consts::TAU;

    fn constant_spec() -> SpatialGrowthSpec {
        let g = CircleGrid::new(64).unwrap();
        build_spatial_spec(Field::constant(g, 0.04), Field::constant(g, 1.0), 0.5, 0.05, g).unwrap()
    }

    fn variable_spec(n: usize) -> SpatialGrowthSpec {
        let g = CircleGrid::new(n).unwrap();
        build_spatial_spec(
            Field::from_fn(g, |t| 0.04 + 0.01 * t.cos()),
            Field::from_fn(g, |t| 1.0 + 0.2 * t.sin()),
            0.5,
            0.03,
            g,
        )
        .unwrap()
    }

    #[test]
    fn constant_coefficient_alpha0() {
        let spec = constant_spec();
        assert!((spec.eigen.lambda0 - 0.04).abs() < 1e-10);
        let expect = 0.5 / 0.03 * TAU.powf(1.5);
        assert!((spec.alpha0 - expect).abs() < 1e-8 * expect);
        assert!((spec.alpha0 - 262.5).abs() < 0.1);
    }

    #[test]
    fn boundary_of_assumption_rejected() {
        let g = CircleGrid::new(32).unwrap();
        let r = build_spatial_spec(Field::constant(g, 0.04), Field::constant(g, 1.0), 0.5, 0.02, g);
        assert!(matches!(r, Err(Error::Assumption { .. })));
        assert!(build_spatial_spec(Field::constant(g, 0.04), Field::constant(g, 1.0), 1.0, 0.05, g).is_err());
    }

    #[test]
    fn beta_is_positive_eigenvector() {
        let spec = variable_spec(256);
        assert!(spec.beta.min() > 0.0);
        let lb = spec.op.apply(&spec.beta).unwrap();
        let defect = lb.zip_with(&spec.beta, |a, b| a - spec.eigen.lambda0 * b).unwrap();
        assert!(defect.l2_norm() < 1e-7 * spec.alpha0);
    }

    #[test]
    fn value_examples() {
        let spec = constant_spec();
        let p = inner_product(&spec.eigen.e0, &spec.beta).unwrap();
        let x = spec.eigen.e0.scale(1.0 / p);
        assert!((value_spatial(&spec, &x).unwrap() - 2.0).abs() < 1e-12);
        let v = value_spatial(&spec, &spec.eigen.e0).unwrap();
        assert!((v - spec.alpha0.sqrt() / 0.5).abs() < 1e-9 * v);
        let v3 = value_spatial(&spec, &spec.eigen.e0.scale(3.0)).unwrap();
        assert!((v3 - 3f64.sqrt() * v).abs() < 1e-12 * v3);
    }

    #[test]
    fn feedback_domain_and_symmetry() {
        let spec = constant_spec();
        let g = spec.grid();
        assert!(feedback_spatial(&spec, &Field::from_fn(g, |t| t.cos() - 0.5)).is_err());
        let c = feedback_spatial(&spec, &Field::constant(g, 1.0)).unwrap();
        assert!(c.max() - c.min() < 1e-12 * c.max());
    }

    #[test]
    fn feedback_matches_pointwise_maximizer() {
        let spec = variable_spec(64);
        let x = Field::from_fn(spec.grid(), |t| 1.0 + 0.3 * (2.0 * t).cos());
        let p = spec.pairing(&x).unwrap();
        let c = feedback_spatial(&spec, &x).unwrap();
        for j in [0, 7, 19, 33, 50] {
            let (n, dv) = (spec.n_pop.values()[j], spec.beta.values()[j] * p.powf(-spec.sigma));
            let best = golden_section_max(|u| crra(u, 0.5) * n - u * n * dv, 1e-12, 10.0 * c.values()[j], 1e-14);
            assert!((best - c.values()[j]).abs() < 1e-9 * (1.0 + c.values()[j]));
        }
    }

    #[test]
    fn residual_examples() {
        let spec = constant_spec();
        assert!(hjb_residual_spatial(&spec, &spec.eigen.e0).unwrap() < 1e-6);
        let spec = variable_spec(512);
        let x = Field::from_fn(spec.grid(), |t| 1.0 + 0.4 * (3.0 * t).sin());
        let r1 = hjb_residual_spatial(&spec, &x).unwrap();
        let r2 = hjb_residual_spatial(&spec, &x.scale(7.5)).unwrap();
        assert!(r1 < 1e-5);
        assert!((r1 - r2).abs() < 1e-10);
    }

    #[test]
    fn value_is_concave() {
        let spec = variable_spec(64);
        let g = spec.grid();
        let x1 = Field::from_fn(g, |t| 1.0 + 0.5 * t.sin());
        let x2 = Field::from_fn(g, |t| 3.0 + (2.0 * t).cos());
        let mid = x1.add(&x2).unwrap().scale(0.5);
        let lhs = value_spatial(&spec, &mid).unwrap();
        let rhs = 0.5 * (value_spatial(&spec, &x1).unwrap() + value_spatial(&spec, &x2).unwrap());
        assert!(lhs >= rhs);
    }

    #[test]
    fn one_step_growth() {
        let spec = variable_spec(128);
        let x0 = spec.eigen.e0.scale(1e-3);
        let dt = 0.01;
        let run = simulate_spatial(&spec, &x0, dt, dt).unwrap();
        let ratio = spec.pairing(&run.trajectory.states[1]).unwrap() / spec.pairing(&x0).unwrap();
        assert!((ratio - (spec.growth_rate() * dt).exp()).abs() < 1e-6);
    }

    #[test]
    fn uncontrolled_constant_growth() {
        let g = CircleGrid::new(64).unwrap();
        let op = SlOperator::new(&Field::constant(g, 1.0), &Field::constant(g, 0.04)).unwrap();
        let zero = Field::constant(g, 0.0);
        let mut y = Field::from_fn(g, |t| 1.0 + 0.5 * t.cos());
        let m0 = quad_circle(&y);
        for _ in 0..100 {
            y = op.cn_step(&y, &zero, 0.1).unwrap();
        }
        assert!((quad_circle(&y) - m0 * 0.4f64.exp()).abs() < 1e-6 * m0);
    }
}
