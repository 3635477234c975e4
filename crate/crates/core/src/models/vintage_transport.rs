//! Vintage capital as a transport equation in age with boundary investment:
//! ∂z/∂t + ∂z/∂s = −μz + u₁, z(t, 0) = u₀(t).

use crate::control::{rollout, BoundaryControl, ControlledModel, OnDomainExit, Policy};
use crate::error::{Error, Result};
use crate::gridcore::{AgeField, AgeGrid, Trajectory};
use crate::spectral::{age_cutoff, transport_resolvent};

pub const REGULARITY: &str = "transport data regularity (finite samples)";
pub const SIGNS: &str = "transport sign conditions (alpha >= 0, q1 >= 0, beta1 >= eps > 0)";
pub const MONOTONICITY: &str = "transport monotonicity (alpha, q1, beta1 nonincreasing in age)";
pub const BOUNDARY: &str = "transport boundary relations (alpha(sbar) = 0, q0 >= q1(0), beta0 >= beta1(0))";
pub const UNBOUNDED_AGE: &str = "unbounded-age discount (rho > -mu)";

/// Coefficients of the revenue and quadratic adjustment costs.
#[derive(Debug, Clone)]
pub struct TransportData {
    pub alpha: AgeField,
    pub q1: AgeField,
    pub beta1: AgeField,
    pub q0: f64,
    pub beta0: f64,
}

#[derive(Debug, Clone)]
pub struct TransportSpec {
    pub mu: f64,
    pub rho: f64,
    pub data: TransportData,
    /// Shadow price ᾱ = (ρ + μ − ∂ₛ)⁻¹α with ᾱ(s̄) = 0.
    pub abar: AgeField,
    pub u0_star: f64,
    pub u1_star: AgeField,
    /// Optimal controls are nonnegative, which keeps z ≥ 0 from z₀ ≥ 0.
    pub positivity_ok: bool,
}

/// Age grid for a maximal age `sbar`, or the truncation [`age_cutoff`] when
/// ages are unbounded.
pub fn transport_grid(sbar: Option<f64>, rho: f64, mu: f64, cells: usize) -> Result<AgeGrid> {
    match sbar {
        Some(s) => AgeGrid::new(s, cells),
        None => {
            if !(rho + mu > 0.0) {
                return Err(Error::assumption(UNBOUNDED_AGE, format!("rho + mu = {}", rho + mu)));
            }
            AgeGrid::new(age_cutoff(rho, mu), cells)
        }
    }
}

fn nonincreasing(f: &AgeField, tol: f64) -> Option<usize> {
    f.values().windows(2).position(|w| w[1] > w[0] + tol)
}

pub fn build_transport_spec(mu: f64, rho: f64, data: TransportData) -> Result<TransportSpec> {
    if !(mu >= 0.0) {
        return Err(Error::param("mu", format!("must be nonnegative, got {mu}")));
    }
    if !(rho > 0.0) {
        return Err(Error::param("rho", format!("must be positive, got {rho}")));
    }
    data.alpha.check_same_grid(&data.q1)?;
    data.alpha.check_same_grid(&data.beta1)?;
    let fields = [("alpha", &data.alpha), ("q1", &data.q1), ("beta1", &data.beta1)];
    for (name, f) in fields {
        if f.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::assumption(REGULARITY, format!("{name} has non-finite samples")));
        }
    }
    if !data.q0.is_finite() || !data.beta0.is_finite() {
        return Err(Error::assumption(REGULARITY, "q0 and beta0 must be finite"));
    }
    if data.alpha.values().iter().any(|&v| v < 0.0) {
        return Err(Error::assumption(SIGNS, format!("alpha has minimum {}", data.alpha.min())));
    }
    if data.q1.values().iter().any(|&v| v < 0.0) || data.q0 < 0.0 {
        return Err(Error::assumption(SIGNS, "q1 and q0 must be nonnegative"));
    }
    if !(data.beta1.min() > 0.0) || !(data.beta0 > 0.0) {
        return Err(Error::assumption(SIGNS, format!("beta1 has minimum {}", data.beta1.min())));
    }
    for (name, f) in fields {
        let tol = 1e-12 * f.max_abs().max(1.0);
        if let Some(k) = nonincreasing(f, tol) {
            return Err(Error::assumption(MONOTONICITY, format!("{name} increases after age {}", f.grid().node(k))));
        }
    }
    let alpha_end = *data.alpha.values().last().expect("nonempty");
    if alpha_end.abs() > 1e-12 * data.alpha.max_abs().max(1.0) {
        return Err(Error::assumption(BOUNDARY, format!("alpha(sbar) = {alpha_end}")));
    }
    if data.q0 < data.q1.at_zero() {
        return Err(Error::assumption(BOUNDARY, format!("q0 = {} < q1(0) = {}", data.q0, data.q1.at_zero())));
    }
    if data.beta0 < data.beta1.at_zero() {
        return Err(Error::assumption(BOUNDARY, format!("beta0 = {} < beta1(0) = {}", data.beta0, data.beta1.at_zero())));
    }

    let abar = transport_resolvent(&data.alpha, rho, mu)?;
    let (u0_star, u1_star, _) = hamiltonian_parts(&data, &abar)?;
    let positivity_ok = data.q0 <= abar.at_zero() && abar.values().iter().zip(data.q1.values()).all(|(a, q)| q <= a);
    Ok(TransportSpec { mu, rho, data, abar, u0_star, u1_star, positivity_ok })
}

/// Maximizers and supremum of the control part of the Hamiltonian at costate p.
fn hamiltonian_parts(data: &TransportData, p: &AgeField) -> Result<(f64, AgeField, f64)> {
    p.check_same_grid(&data.q1)?;
    let u0 = (p.at_zero() - data.q0) / (2.0 * data.beta0);
    let u1 = AgeField::new(
        p.grid(),
        p.values()
            .iter()
            .zip(data.q1.values())
            .zip(data.beta1.values())
            .map(|((p, q), b)| (p - q) / (2.0 * b))
            .collect(),
    )?;
    let gap = p.zip_with(&data.q1, |p, q| p - q)?;
    let dist = gap.zip_with(&data.beta1, |g, b| g * g / (4.0 * b))?.integral();
    let sup = (p.at_zero() - data.q0).powi(2) / (4.0 * data.beta0) + dist;
    Ok((u0, u1, sup))
}

impl TransportSpec {
    pub fn grid(&self) -> AgeGrid {
        self.abar.grid()
    }

    pub fn optimal_control(&self) -> BoundaryControl {
        BoundaryControl { boundary: self.u0_star, distributed: self.u1_star.clone() }
    }

    /// Constant part of the value: sup of the control Hamiltonian at ᾱ over ρ.
    pub fn value_constant(&self) -> f64 {
        hamiltonian_parts(&self.data, &self.abar).expect("grids checked at build").2 / self.rho
    }
}

/// Argmax (u₀, u₁) and supremum of the control part of the Hamiltonian at
/// costate `p`.
pub fn hamiltonian_transport(spec: &TransportSpec, p: &AgeField) -> Result<(f64, AgeField, f64)> {
    hamiltonian_parts(&spec.data, p)
}

pub fn value_transport(spec: &TransportSpec, x: &AgeField) -> Result<f64> {
    Ok(spec.abar.inner(x)? + spec.value_constant())
}

/// Relative HJB defect at `x`, with the adjoint generator ∂ₛ − μ applied to ᾱ
/// by finite differences.
pub fn hjb_residual_transport(spec: &TransportSpec, x: &AgeField) -> Result<f64> {
    let generator = spec.abar.derivative().zip_with(&spec.abar, |d, a| d - spec.mu * a)?;
    let linear = spec.data.alpha.add(&generator)?.inner(x)?;
    let (_, _, sup) = hamiltonian_transport(spec, &spec.abar)?;
    let lhs = spec.rho * value_transport(spec, x)?;
    let scale = lhs.abs().max(linear.abs()).max(sup.abs());
    Ok((lhs - linear - sup).abs() / scale)
}

/// Composite Simpson rule for ∫₀^L e^{−μσ} f(σ) dσ on panels no wider than `h`.
fn decayed_integral(mu: f64, len: f64, h: f64, f: impl Fn(f64) -> f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let panels = ((len / h).ceil() as usize).max(1) * 2;
    let w = len / panels as f64;
    let g = |k: usize| {
        let s = k as f64 * w;
        (-mu * s).exp() * f(s)
    };
    let mut acc = g(0) + g(panels);
    for k in 1..panels {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k);
    }
    acc * w / 3.0
}

/// Optimal trajectory at time `t` by the method of characteristics, sampled on
/// the grid of `z0`. Ages reached from the boundary carry the boundary inflow
/// plus the accumulated distributed investment.
pub fn optimal_trajectory_closed_form(spec: &TransportSpec, z0: &AgeField, t: f64) -> Result<AgeField> {
    z0.check_same_grid(&spec.abar)?;
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("must be nonnegative, got {t}")));
    }
    let grid = z0.grid();
    let h = grid.spacing() / 8.0;
    let mu = spec.mu;
    let u1 = &spec.u1_star;
    let values = grid
        .nodes()
        .map(|s| {
            if s >= t {
                (-mu * t).exp() * z0.interpolate(s - t) + decayed_integral(mu, t, h, |r| u1.interpolate(s - r))
            } else {
                (-mu * s).exp() * spec.u0_star + decayed_integral(mu, s, h, |r| u1.interpolate(s - r))
            }
        })
        .collect();
    AgeField::new(grid, values)
}

impl ControlledModel for TransportSpec {
    type State = AgeField;
    type Control = BoundaryControl;

    fn discount(&self) -> f64 {
        self.rho
    }

    fn value(&self, state: &AgeField) -> Result<f64> {
        value_transport(self, state)
    }

    fn feedback(&self, _state: &AgeField) -> Result<BoundaryControl> {
        Ok(self.optimal_control())
    }

    /// Upwind step at unit Courant number: each value moves one age cell,
    /// decays by e^{−μ dt} and gains dt times the distributed investment at its
    /// new age; the boundary node takes the boundary investment.
    fn step(&self, state: &AgeField, control: &BoundaryControl, next: &BoundaryControl, dt: f64) -> Result<AgeField> {
        let h = state.grid().spacing();
        if (dt - h).abs() > 1e-9 * h {
            return Err(Error::StepMismatch { expected: h, got: dt });
        }
        state.check_same_grid(&next.distributed)?;
        let decay = (-self.mu * dt).exp();
        let z = state.values();
        let (u1, u1n) = (control.distributed.values(), next.distributed.values());
        let mut out = Vec::with_capacity(z.len());
        out.push(next.boundary);
        for k in 0..z.len() - 1 {
            out.push(decay * z[k] + 0.5 * dt * (u1[k + 1] + u1n[k + 1]));
        }
        AgeField::new(state.grid(), out)
    }

    /// Revenue ⟨α, z⟩ net of linear and quadratic investment costs.
    fn running_payoff(&self, state: &AgeField, control: &BoundaryControl) -> Result<f64> {
        let d = &self.data;
        let revenue = d.alpha.inner(state)?;
        let u1 = &control.distributed;
        let cost1 = u1.zip_with(&d.q1, |u, q| q * u)?.add(&u1.zip_with(&d.beta1, |u, b| b * u * u)?)?.integral();
        let u0 = control.boundary;
        Ok(revenue - cost1 - d.q0 * u0 - d.beta0 * u0 * u0)
    }

    fn domain_check(&self, _state: &AgeField) -> std::result::Result<(), String> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TransportRun {
    pub trajectory: Trajectory<AgeField, BoundaryControl>,
    pub min_state: f64,
}

/// Run under an arbitrary investment policy with dt equal to the age spacing.
pub fn simulate_transport(
    spec: &TransportSpec,
    z0: &AgeField,
    policy: &Policy<'_, TransportSpec>,
    t_end: f64,
) -> Result<TransportRun> {
    z0.check_same_grid(&spec.abar)?;
    let trajectory = rollout(spec, z0, policy, t_end, spec.grid().spacing(), OnDomainExit::Record)?;
    let min_state = trajectory.states.iter().map(|z| z.min()).fold(f64::INFINITY, f64::min);
    Ok(TransportRun { trajectory, min_state })
}

pub fn simulate_transport_optimal(spec: &TransportSpec, z0: &AgeField, t_end: f64) -> Result<TransportRun> {
    let u = spec.optimal_control();
    simulate_transport(spec, z0, &|_, _| Ok(u.clone()), t_end)
}

/// Default coefficient profiles on `grid`: linearly falling revenue,
/// quadratically falling price and a cost curvature that halves with age.
pub fn default_transport_data(grid: AgeGrid) -> TransportData {
    let sbar = grid.sbar();
    TransportData {
        alpha: AgeField::from_fn(grid, |s| 1.0 - s / sbar),
        q1: AgeField::from_fn(grid, |s| 0.5 * (1.0 - s / sbar).powi(2)),
        beta1: AgeField::from_fn(grid, |s| 1.0 + 0.5 * (1.0 - s / sbar)),
        q0: 1.0,
        beta0: 2.0,
    }
}
