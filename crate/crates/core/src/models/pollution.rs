//! Transboundary pollution on the circle: affine value, state-independent investment.

use crate::control::{rollout_optimal, ControlledModel, OnDomainExit};
use crate::error::{Error, Result};
use crate::gridcore::{inner_product, quad_circle, sl_apply_reference, CircleGrid, Field, SlOperator, Trajectory};
use crate::spectral::solve_elliptic;

/// Pointwise coefficients of the pollution model.
#[derive(Debug, Clone)]
pub struct PollutionFields {
    /// Diffusivity σ(θ) > 0.
    pub sigma_diff: Field,
    /// Natural decay δ(θ) ≥ 0.
    pub delta_dec: Field,
    /// Emission intensity η(θ) ≥ 0.
    pub eta: Field,
    /// Productivity a(θ) > 1.
    pub a_prod: Field,
    /// CRRA exponent γ(θ), all in (0, 1) or all in (1, ∞).
    pub gamma: Field,
    /// Disutility weight w(θ) > 0.
    pub w_dis: Field,
}

#[derive(Debug, Clone)]
pub struct PollutionSpec {
    pub fields: PollutionFields,
    pub rho: f64,
    /// α solving (ρ − 𝒜)α = w.
    pub alpha_shadow: Field,
    pub i_star: Field,
    pub q_const: f64,
    op: SlOperator,
}

pub fn build_pollution_spec(fields: PollutionFields, rho: f64) -> Result<PollutionSpec> {
    let f = &fields;
    let grid = f.sigma_diff.grid();
    for (name, field) in [
        ("sigma", &f.sigma_diff),
        ("delta", &f.delta_dec),
        ("eta", &f.eta),
        ("a", &f.a_prod),
        ("gamma", &f.gamma),
        ("w", &f.w_dis),
    ] {
        if field.grid() != grid {
            return Err(Error::GridMismatch(format!("`{name}` sampled on a different grid")));
        }
        if !field.is_finite() {
            return Err(Error::param(name, "non-finite values"));
        }
    }
    positive("sigma", &f.sigma_diff, 0.0)?;
    if f.delta_dec.min() < 0.0 {
        return Err(Error::param("delta", format!("must be nonnegative, min {}", f.delta_dec.min())));
    }
    if f.eta.min() < 0.0 {
        return Err(Error::param("eta", format!("must be nonnegative, min {}", f.eta.min())));
    }
    positive("a", &f.a_prod, 1.0)?;
    positive("w", &f.w_dis, 0.0)?;
    let (gmin, gmax) = (f.gamma.min(), f.gamma.max());
    let one_regime = (gmin > 0.0 && gmax < 1.0) || gmin > 1.0;
    if !one_regime {
        return Err(Error::param("gamma", format!("values must lie all in (0,1) or all in (1,inf), range [{gmin}, {gmax}]")));
    }
    if !(rho > 0.0) {
        return Err(Error::param("rho", format!("must be positive, got {rho}")));
    }
    let alpha_shadow = solve_elliptic(rho, &f.sigma_diff, &f.delta_dec, &f.w_dis)?;
    let n = grid.n();
    let mut i_star = Vec::with_capacity(n);
    let mut sup = Vec::with_capacity(n);
    for j in 0..n {
        let (a, g) = (f.a_prod.values()[j], f.gamma.values()[j]);
        let price = f.eta.values()[j] * alpha_shadow.values()[j];
        if !(price > 0.0) {
            return Err(Error::Domain(format!(
                "eta*alpha = {price} at node {j}: investment payoff has no maximizer"
            )));
        }
        let i = investment_foc(a, g, price);
        i_star.push(i);
        sup.push(investment_payoff(a, g, price, i));
    }
    let i_star = Field::new(grid, i_star)?;
    let q_const = quad_circle(&Field::new(grid, sup)?) / rho;
    let op = SlOperator::new(&f.sigma_diff, &f.delta_dec.scale(-1.0))?;
    Ok(PollutionSpec { fields, rho, alpha_shadow, i_star, q_const, op })
}

fn positive(name: &'static str, f: &Field, bound: f64) -> Result<()> {
    if !(f.min() > bound) {
        return Err(Error::param(name, format!("must exceed {bound}, min {}", f.min())));
    }
    Ok(())
}

/// Maximizer of i ↦ ((a−1)i)^{1−γ}/(1−γ) − price·i over i > 0.
pub fn investment_foc(a: f64, gamma: f64, price: f64) -> f64 {
    (price / (a - 1.0)).powf(-1.0 / gamma) / (a - 1.0)
}

pub fn investment_payoff(a: f64, gamma: f64, price: f64, i: f64) -> f64 {
    ((a - 1.0) * i).powf(1.0 - gamma) / (1.0 - gamma) - price * i
}

impl PollutionSpec {
    pub fn grid(&self) -> CircleGrid {
        self.alpha_shadow.grid()
    }

    fn running(&self, p: &Field, i: &Field) -> Result<f64> {
        if i.min() < 0.0 {
            return Err(Error::Domain(format!("negative investment {}", i.min())));
        }
        let f = &self.fields;
        let mut acc = Vec::with_capacity(p.len());
        for j in 0..p.len() {
            let (a, g) = (f.a_prod.values()[j], f.gamma.values()[j]);
            let u = ((a - 1.0) * i.values()[j]).powf(1.0 - g) / (1.0 - g);
            acc.push(u - f.w_dis.values()[j] * p.values()[j]);
        }
        Ok(quad_circle(&Field::new(p.grid(), acc)?))
    }
}

pub fn optimal_investment(spec: &PollutionSpec) -> Field {
    spec.i_star.clone()
}

/// v(x) = −⟨α, x⟩ + q.
pub fn value_pollution(spec: &PollutionSpec, p0: &Field) -> Result<f64> {
    Ok(spec.q_const - inner_product(&spec.alpha_shadow, p0)?)
}

/// Relative HJB defect at `x` with the generator evaluated by the
/// fourth-order reference stencil.
pub fn hjb_residual_pollution(spec: &PollutionSpec, x: &Field) -> Result<f64> {
    let f = &spec.fields;
    let lhs = spec.rho * value_pollution(spec, x)?;
    let dv = spec.alpha_shadow.scale(-1.0);
    let generator = inner_product(x, &sl_apply_reference(&f.sigma_diff, &f.delta_dec.scale(-1.0), &dv)?)?;
    let damage = inner_product(&f.w_dis, x)?;
    let sup = spec.rho * spec.q_const;
    let scale = lhs.abs().max(generator.abs()).max(damage.abs()).max(sup.abs());
    Ok((lhs - generator + damage - sup).abs() / scale)
}

impl ControlledModel for PollutionSpec {
    type State = Field;
    type Control = Field;

    fn discount(&self) -> f64 {
        self.rho
    }

    fn value(&self, state: &Field) -> Result<f64> {
        value_pollution(self, state)
    }

    fn feedback(&self, _state: &Field) -> Result<Field> {
        Ok(self.i_star.clone())
    }

    fn step(&self, state: &Field, control: &Field, next_control: &Field, dt: f64) -> Result<Field> {
        let emission = control.add(next_control)?.mul(&self.fields.eta)?.scale(0.5);
        self.op.cn_step(state, &emission, dt)
    }

    fn running_payoff(&self, state: &Field, control: &Field) -> Result<f64> {
        self.running(state, control)
    }

    fn domain_check(&self, _state: &Field) -> std::result::Result<(), String> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PollutionRun {
    pub trajectory: Trajectory<Field, Field>,
    pub min_state: f64,
    /// min p ≥ −1e−10 over the run.
    pub max_principle_ok: bool,
}

pub fn simulate_pollution(spec: &PollutionSpec, p0: &Field, t_end: f64, dt: f64) -> Result<PollutionRun> {
    if p0.min() < 0.0 {
        return Err(Error::param("p0", format!("initial pollution must be nonnegative, min {}", p0.min())));
    }
    let trajectory = rollout_optimal(spec, p0, t_end, dt, OnDomainExit::Abort)?;
    let min_state = trajectory.states.iter().map(Field::min).fold(f64::INFINITY, f64::min);
    Ok(PollutionRun { trajectory, min_state, max_principle_ok: min_state >= -1e-10 })
}
