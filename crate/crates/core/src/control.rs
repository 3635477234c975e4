//! Common face of the controlled models and the closed-loop integrator.

use crate::error::{Error, Result};
use crate::gridcore::{AgeField, Field, Trajectory};

/// Controls that can be compared and rescaled.
pub trait ControlVector: Clone + Send + Sync {
    fn distance(&self, other: &Self) -> f64;
    fn magnitude(&self) -> f64;
    fn scaled(&self, k: f64) -> Self;
}

impl ControlVector for f64 {
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }

    fn magnitude(&self) -> f64 {
        self.abs()
    }

    fn scaled(&self, k: f64) -> Self {
        k * self
    }
}

impl ControlVector for Field {
    fn distance(&self, other: &Self) -> f64 {
        self.values().iter().zip(other.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    fn magnitude(&self) -> f64 {
        self.max_abs()
    }

    fn scaled(&self, k: f64) -> Self {
        self.scale(k)
    }
}

/// Boundary investment u₀ and distributed investment u₁(s) of the transport model.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryControl {
    pub boundary: f64,
    pub distributed: AgeField,
}

impl ControlVector for BoundaryControl {
    fn distance(&self, other: &Self) -> f64 {
        let d: f64 = self
            .distributed
            .values()
            .iter()
            .zip(other.distributed.values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        d.max((self.boundary - other.boundary).abs())
    }

    fn magnitude(&self) -> f64 {
        self.distributed.max_abs().max(self.boundary.abs())
    }

    fn scaled(&self, k: f64) -> Self {
        Self { boundary: k * self.boundary, distributed: self.distributed.map(|v| k * v) }
    }
}

/// A discounted infinite-horizon control problem with a candidate solution.
///
/// `step` integrates over one time step given the control in force at its
/// start and at its end; the closed loop is closed by [`rollout`], which
/// solves for the end-of-step control self-consistently.
pub trait ControlledModel: Sync {
    type State: Clone + Send + Sync;
    type Control: ControlVector;

    fn discount(&self) -> f64;

    fn value(&self, state: &Self::State) -> Result<f64>;

    fn feedback(&self, state: &Self::State) -> Result<Self::Control>;

    fn step(&self, state: &Self::State, control: &Self::Control, next_control: &Self::Control, dt: f64)
        -> Result<Self::State>;

    fn running_payoff(&self, state: &Self::State, control: &Self::Control) -> Result<f64>;

    /// `Err(reason)` when the state lies outside the set on which the
    /// feedback is admissible.
    fn domain_check(&self, state: &Self::State) -> std::result::Result<(), String>;

    /// Record the control applied at the current instant in the state.
    /// Delay models keep it as the newest history sample.
    fn attach_control(&self, state: &Self::State, _control: &Self::Control) -> Self::State {
        state.clone()
    }
}

/// Time-dependent state feedback t, y ↦ u.
pub type Policy<'a, M> =
    dyn Fn(f64, &<M as ControlledModel>::State) -> Result<<M as ControlledModel>::Control> + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnDomainExit {
    Abort,
    Record,
}

const FIXED_POINT_TOL: f64 = 1e-14;
const FIXED_POINT_CAP: usize = 200;

/// Solve u = policy(t, attach(state, u)).
pub fn settle<M: ControlledModel>(
    model: &M,
    state: &M::State,
    policy: &Policy<'_, M>,
    t: f64,
) -> Result<(M::State, M::Control)> {
    let mut u = policy(t, state)?;
    for _ in 0..FIXED_POINT_CAP {
        let y = model.attach_control(state, &u);
        let next = policy(t, &y)?;
        let gap = next.distance(&u);
        u = next;
        if gap <= FIXED_POINT_TOL * (1.0 + u.magnitude()) {
            return Ok((model.attach_control(state, &u), u));
        }
    }
    Err(Error::NoConvergence { iterations: FIXED_POINT_CAP, residual: f64::NAN })
}

/// One closed-loop step: find u⁺ with u⁺ = policy(t + dt, step(y, u, u⁺)).
pub fn closed_loop_step<M: ControlledModel>(
    model: &M,
    state: &M::State,
    control: &M::Control,
    policy: &Policy<'_, M>,
    t_next: f64,
    dt: f64,
) -> Result<(M::State, M::Control)> {
    let mut guess = control.clone();
    let mut gap = f64::INFINITY;
    for _ in 0..FIXED_POINT_CAP {
        let y = model.step(state, control, &guess, dt)?;
        let u = policy(t_next, &y)?;
        gap = u.distance(&guess);
        let done = gap <= FIXED_POINT_TOL * (1.0 + u.magnitude());
        guess = u;
        if done {
            let y = model.step(state, control, &guess, dt)?;
            return Ok((y, guess));
        }
    }
    Err(Error::NoConvergence { iterations: FIXED_POINT_CAP, residual: gap })
}

/// Integrate the closed loop under `policy` over [0, t_end] with step `dt`.
///
/// The number of steps is `round(t_end / dt)`.
pub fn rollout<M: ControlledModel>(
    model: &M,
    x0: &M::State,
    policy: &Policy<'_, M>,
    t_end: f64,
    dt: f64,
    on_exit: OnDomainExit,
) -> Result<Trajectory<M::State, M::Control>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::param("t_end", format!("must be nonnegative, got {t_end}")));
    }
    let steps = (t_end / dt).round() as usize;
    let (y0, u0) = settle(model, x0, policy, 0.0)?;
    let g0 = model.running_payoff(&y0, &u0)?;
    let mut traj = Trajectory::start(dt, model.discount(), y0, u0, g0)?;
    check_domain(model, &mut traj, on_exit)?;
    for n in 0..steps {
        let t_next = (n + 1) as f64 * dt;
        let (y, u) = {
            let k = traj.len() - 1;
            closed_loop_step(model, &traj.states[k], &traj.controls[k], policy, t_next, dt)?
        };
        let g = model.running_payoff(&y, &u)?;
        traj.push(y, u, g);
        check_domain(model, &mut traj, on_exit)?;
    }
    Ok(traj)
}

fn check_domain<M: ControlledModel>(
    model: &M,
    traj: &mut Trajectory<M::State, M::Control>,
    on_exit: OnDomainExit,
) -> Result<()> {
    if traj.domain_exit.is_some() {
        return Ok(());
    }
    if let Err(reason) = model.domain_check(traj.final_state()) {
        let t = traj.final_time();
        if on_exit == OnDomainExit::Abort {
            return Err(Error::DomainExit { t, detail: reason });
        }
        traj.domain_exit = Some((t, reason));
    }
    Ok(())
}

/// Rollout under the model's own feedback.
pub fn rollout_optimal<M: ControlledModel>(
    model: &M,
    x0: &M::State,
    t_end: f64,
    dt: f64,
    on_exit: OnDomainExit,
) -> Result<Trajectory<M::State, M::Control>> {
    let policy = |_t: f64, y: &M::State| model.feedback(y);
    rollout(model, x0, &policy, t_end, dt, on_exit)
}
