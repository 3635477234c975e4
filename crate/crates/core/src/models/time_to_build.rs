//! Kalecki time-to-build in output coordinates: q′(t) = Ã u(t − d).

use crate::control::{rollout_optimal, ControlledModel, OnDomainExit};
use crate::error::{Error, Result};
use crate::gridcore::{HistorySegment, StructuralState, Trajectory};
use crate::spectral::{char_root_ttb, CharRoot};

use super::delay::{check_locked_step, delayed_cell, exp_weight_derivative, pair_integral, DelayState};
use super::spatial_growth::{check_crra, crra};

pub const FINITE_UTILITY: &str = "time-to-build finite-utility assumption (rho > xi*(1 - sigma))";

#[derive(Debug, Clone)]
pub struct TtbSpec {
    pub a: f64,
    pub delta_dep: f64,
    pub d: f64,
    pub sigma: f64,
    pub rho: f64,
    pub a_tilde: f64,
    pub xi: CharRoot,
    /// Marginal propensity to consume out of Γ: (ρ − ξ(1−σ))/(σξ).
    pub alpha_mpc: f64,
    /// Value coefficient α^{−σ}/ξ.
    pub nu: f64,
}

pub type TtbState = StructuralState;

pub fn build_ttb_spec(a: f64, delta_dep: f64, d: f64, sigma: f64, rho: f64) -> Result<TtbSpec> {
    check_crra(sigma)?;
    if !(a > 0.0) {
        return Err(Error::param("A", format!("must be positive, got {a}")));
    }
    if !(delta_dep >= 0.0) {
        return Err(Error::param("delta", format!("must be nonnegative, got {delta_dep}")));
    }
    if !(d > 0.0) {
        return Err(Error::param("d", format!("gestation lag must be positive, got {d}")));
    }
    if !(rho > 0.0) {
        return Err(Error::param("rho", format!("must be positive, got {rho}")));
    }
    let a_tilde = a - delta_dep;
    let xi = char_root_ttb(a_tilde, d)?;
    let margin = rho - xi.xi * (1.0 - sigma);
    if !(margin > 0.0) {
        return Err(Error::assumption(FINITE_UTILITY, format!("rho = {rho}, xi*(1 - sigma) = {}", xi.xi * (1.0 - sigma))));
    }
    let alpha_mpc = margin / (sigma * xi.xi);
    let nu = alpha_mpc.powf(-sigma) / xi.xi;
    Ok(TtbSpec { a, delta_dep, d, sigma, rho, a_tilde, xi, alpha_mpc, nu })
}

impl TtbSpec {
    /// Balanced growth rate (ξ − ρ)/σ of Γ.
    pub fn growth_rate(&self) -> f64 {
        (self.xi.xi - self.rho) / self.sigma
    }

    /// Factor (Ã/A)^{1−σ} between consumption utility and the (q − u) form.
    pub fn utility_factor(&self) -> f64 {
        (self.a_tilde / self.a).powf(1.0 - self.sigma)
    }

    pub fn lift(&self, state: &DelayState) -> Result<TtbState> {
        lift_ttb(self, state.head, &state.controls)
    }
}

/// Structural state from output q and the chronological control history u on
/// [−d, 0]: x¹(s) = Ã u(−d − s).
pub fn lift_ttb(spec: &TtbSpec, q: f64, u_history: &HistorySegment) -> Result<TtbState> {
    StructuralState::new(q, u_history.reversed().map(|v| spec.a_tilde * v))
}

/// Output coordinates from a capital history on [−d, 0]: q₀ = A k(−d) and
/// u(s) = (A/Ã) k̇(s). Without derivative samples, k̇ is finite-differenced.
pub fn to_output_coords(
    spec: &TtbSpec,
    k_history: &HistorySegment,
    k_dot: Option<&HistorySegment>,
) -> Result<(f64, HistorySegment)> {
    if !(spec.a_tilde > 0.0) {
        return Err(Error::param("Atilde", "A - delta must be positive"));
    }
    let derivative = match k_dot {
        Some(kd) => {
            if !kd.same_sampling(k_history) {
                return Err(Error::GridMismatch("derivative samples differ from value samples".into()));
            }
            kd.clone()
        }
        None => finite_difference(k_history),
    };
    Ok((spec.a * k_history.oldest(), derivative.map(|v| spec.a / spec.a_tilde * v)))
}

fn finite_difference(h: &HistorySegment) -> HistorySegment {
    let m = h.m();
    let dx = h.spacing();
    let d: Vec<f64> = (0..=m)
        .map(|k| {
            if k == 0 {
                (-3.0 * h.get(0) + 4.0 * h.get(1) - h.get(2)) / (2.0 * dx)
            } else if k == m {
                (3.0 * h.get(m) - 4.0 * h.get(m - 1) + h.get(m - 2)) / (2.0 * dx)
            } else {
                (h.get(k + 1) - h.get(k - 1)) / (2.0 * dx)
            }
        })
        .collect();
    HistorySegment::new(h.delay(), d).expect("same sampling")
}

/// Γ = x⁰ + ∫ e^{ξs} x¹(s) ds.
pub fn gamma_ttb(state: &TtbState, xi: f64) -> f64 {
    state.head + state.tail.weighted_sum(xi)
}

pub fn value_ttb(spec: &TtbSpec, state: &TtbState) -> Result<f64> {
    let g = gamma_ttb(state, spec.xi.xi);
    if !(g > 0.0) {
        return Err(Error::Domain(format!("Gamma = {g} <= 0")));
    }
    Ok(spec.nu * crra(g, spec.sigma))
}

/// u* = x⁰ − αΓ on {Γ > 0, αÃΓ < A x⁰}, where u* stays inside the
/// irreversibility band [(1 − A/Ã)x⁰, x⁰).
pub fn feedback_ttb(spec: &TtbSpec, state: &TtbState) -> Result<f64> {
    let g = gamma_ttb(state, spec.xi.xi);
    if !(g > 0.0) {
        return Err(Error::Domain(format!("Gamma = {g} <= 0")));
    }
    let bound = state.head * spec.a / (spec.alpha_mpc * spec.a_tilde);
    if !(g < bound) {
        return Err(Error::Domain(format!("Gamma = {g} >= q*A/(alpha*Atilde) = {bound}")));
    }
    Ok(state.head - spec.alpha_mpc * g)
}

/// Relative HJB defect at `state` with the generator acting on Dv through a
/// finite-difference derivative on the lag grid.
pub fn hjb_residual_ttb(spec: &TtbSpec, state: &TtbState) -> Result<f64> {
    let xi = spec.xi.xi;
    let g = gamma_ttb(state, xi);
    let v = value_ttb(spec, state)?;
    let scale_dv = spec.nu * g.powf(-spec.sigma);
    let generator = scale_dv * pair_integral(&exp_weight_derivative(&state.tail, xi), &state.tail);
    let b_dv = scale_dv * spec.a_tilde * (-xi * spec.d).exp();
    let u = state.head - b_dv.powf(-1.0 / spec.sigma);
    let hamiltonian = crra(state.head - u, spec.sigma) + u * b_dv;
    let lhs = spec.rho * v;
    let scale = lhs.abs().max(generator.abs()).max(hamiltonian.abs());
    Ok((lhs - generator - hamiltonian).abs() / scale)
}

impl ControlledModel for TtbSpec {
    type State = DelayState;
    type Control = f64;

    fn discount(&self) -> f64 {
        self.rho
    }

    fn value(&self, state: &DelayState) -> Result<f64> {
        value_ttb(self, &self.lift(state)?)
    }

    fn feedback(&self, state: &DelayState) -> Result<f64> {
        feedback_ttb(self, &self.lift(state)?)
    }

    fn step(&self, state: &DelayState, _control: &f64, next_control: &f64, dt: f64) -> Result<DelayState> {
        check_locked_step(&state.controls, dt)?;
        let head = state.head + self.a_tilde * delayed_cell(&state.controls, dt);
        let mut controls = state.controls.clone();
        controls.advance(dt, *next_control)?;
        Ok(DelayState { head, controls })
    }

    fn running_payoff(&self, state: &DelayState, control: &f64) -> Result<f64> {
        let c = state.head - control;
        if !(c > 0.0) {
            return Err(Error::Domain(format!("q - u = {c} <= 0")));
        }
        Ok(crra(c, self.sigma))
    }

    fn domain_check(&self, state: &DelayState) -> std::result::Result<(), String> {
        let lifted = self.lift(state).map_err(|e| e.to_string())?;
        feedback_ttb(self, &lifted).map(|_| ()).map_err(|e| e.to_string())
    }

    fn attach_control(&self, state: &DelayState, control: &f64) -> DelayState {
        let mut s = state.clone();
        s.controls.set_newest(*control);
        s
    }
}

#[derive(Debug, Clone)]
pub struct TtbRun {
    pub trajectory: Trajectory<DelayState, f64>,
    /// Payoff in consumption units: the (q − u) payoff times (Ã/A)^{1−σ}.
    pub consumption_payoff: f64,
    pub min_consumption: f64,
    /// Whether u stayed in [(1 − A/Ã)q, q] at every step.
    pub band_ok: bool,
}

/// Closed-loop run from output `q0` and the control history on [−d, 0]; the
/// time step is the history spacing d/m. The newest history sample is
/// replaced by the feedback control at t = 0.
pub fn simulate_ttb(spec: &TtbSpec, q0: f64, u0_history: &HistorySegment, t_end: f64) -> Result<TtbRun> {
    if (u0_history.delay() - spec.d).abs() > 1e-12 * spec.d {
        return Err(Error::GridMismatch(format!("history covers {} but d = {}", u0_history.delay(), spec.d)));
    }
    let x0 = DelayState { head: q0, controls: u0_history.clone() };
    let trajectory = rollout_optimal(spec, &x0, t_end, u0_history.spacing(), OnDomainExit::Abort)?;
    let lower = 1.0 - spec.a / spec.a_tilde;
    let mut min_consumption = f64::INFINITY;
    let mut band_ok = true;
    for (s, u) in trajectory.states.iter().zip(&trajectory.controls) {
        min_consumption = min_consumption.min(spec.a_tilde / spec.a * (s.head - u));
        band_ok &= *u >= lower * s.head && *u <= s.head;
    }
    let consumption_payoff = spec.utility_factor() * trajectory.total_payoff();
    Ok(TtbRun { trajectory, consumption_payoff, min_consumption, band_ok })
}

/// Right side of the autonomous delay equation for the optimal control,
/// u′ = Ãu(t−d)(1−α) − α(ξF + Ã(e^{−ξd}u(t) − u(t−d))) with
/// F(t) = Ãe^{ξ(t−d)}∫_{t−d}^t e^{−ξr}u(r)dr, from the window u on [t − d, t].
fn dde_rhs(spec: &TtbSpec, window: &[f64], dt: f64) -> f64 {
    let m = window.len() - 1;
    let xi = spec.xi.xi;
    let (at, al) = (spec.a_tilde, spec.alpha_mpc);
    let decay = (-xi * spec.d).exp();
    let integral = dt * window
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            w * (xi * (m - k) as f64 * dt).exp() * v
        })
        .sum::<f64>();
    let f = at * decay * integral;
    let (delayed, now) = (window[0], window[m]);
    at * delayed * (1.0 - al) - al * (xi * f + at * (decay * now - delayed))
}

/// Integrate the delay equation for the optimal control by the trapezoid
/// rule, from the history on [−d, 0] (newest sample u(0)) over [0, t_end].
/// Returns u at 0, dt, 2dt, ….
pub fn openloop_control_path(spec: &TtbSpec, u_history: &HistorySegment, t_end: f64) -> Result<Vec<f64>> {
    let m = u_history.m();
    let dt = u_history.spacing();
    let steps = (t_end / dt).round() as usize;
    let mut u = u_history.to_vec();
    for n in 0..steps {
        let now = dde_rhs(spec, &u[n..=m + n], dt);
        // The right side is affine in the newest sample; split off its slope.
        u.push(0.0);
        let base = dde_rhs(spec, &u[n + 1..=m + n + 1], dt);
        u[m + n + 1] = 1.0;
        let slope = dde_rhs(spec, &u[n + 1..=m + n + 1], dt) - base;
        let prev = u[m + n];
        u[m + n + 1] = (prev + 0.5 * dt * (now + base)) / (1.0 - 0.5 * dt * slope);
    }
    Ok(u.split_off(m))
}

/// Largest defect of the delay equation for the optimal control along a
/// simulated path, in step-integrated trapezoid form.
pub fn openloop_dde_residual(spec: &TtbSpec, traj: &Trajectory<DelayState, f64>) -> Result<f64> {
    if traj.final_time() < spec.d {
        return Err(Error::param("trajectory", format!("length {} shorter than the lag {}", traj.final_time(), spec.d)));
    }
    let dt = traj.dt;
    let m = traj.states[0].controls.m();
    let mut u: Vec<f64> = traj.states[0].controls.to_vec();
    u.extend(&traj.controls[1..]);
    let mut worst = 0.0f64;
    for n in 0..traj.len() - 1 {
        let lhs = (u[m + n + 1] - u[m + n]) / dt;
        let rhs = 0.5 * (dde_rhs(spec, &u[n..=m + n], dt) + dde_rhs(spec, &u[n + 1..=m + n + 1], dt));
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Capital path of k′(t) = Ãk(t − d) − c(t) from the history on [−d, 0]
/// under the consumption samples `c` at 0, dt, … (trapezoid rule).
/// Returns k at −d, …, 0, dt, ….
pub fn capital_path(spec: &TtbSpec, k_history: &HistorySegment, consumption: &[f64]) -> Vec<f64> {
    let m = k_history.m();
    let dt = k_history.spacing();
    let mut k = k_history.to_vec();
    for n in 0..consumption.len().saturating_sub(1) {
        let inflow = spec.a_tilde * (k[n] + k[n + 1]) - consumption[n] - consumption[n + 1];
        k.push(k[m + n] + 0.5 * dt * inflow);
    }
    k
}
