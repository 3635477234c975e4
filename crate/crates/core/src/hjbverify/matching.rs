use serde::Serialize;

use crate::control::{rollout, rollout_optimal, ControlledModel, OnDomainExit, Policy};
use crate::error::{Error, Result};
use crate::gridcore::Trajectory;
use crate::scalar::regression_slope;

/// Truncated payoff plus analytic tail against the analytic value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueMatch {
    pub analytic: f64,
    pub truncated: f64,
    pub tail: f64,
    pub t_end: f64,
    /// |truncated + tail − analytic| / |analytic|.
    pub relative_gap: f64,
}

impl ValueMatch {
    pub fn total(&self) -> f64 {
        self.truncated + self.tail
    }
}

fn tail_of<M: ControlledModel>(model: &M, traj: &Trajectory<M::State, M::Control>) -> Result<f64> {
    Ok((-model.discount() * traj.final_time()).exp() * model.value(traj.final_state())?)
}

/// Run the optimal feedback on [0, t_end] and close the books with the value
/// at the final state. Leaving the feedback domain is an error.
pub fn value_match<M: ControlledModel>(model: &M, x0: &M::State, t_end: f64, dt: f64) -> Result<ValueMatch> {
    value_match_along(model, &rollout_optimal(model, x0, t_end, dt, OnDomainExit::Abort)?)
}

/// [`value_match`] for an existing feedback trajectory.
pub fn value_match_along<M: ControlledModel>(model: &M, traj: &Trajectory<M::State, M::Control>) -> Result<ValueMatch> {
    let analytic = model.value(&traj.states[0])?;
    let truncated = traj.total_payoff();
    let tail = tail_of(model, traj)?;
    let relative_gap = ((truncated + tail) - analytic).abs() / analytic.abs();
    Ok(ValueMatch { analytic, truncated, tail, t_end: traj.final_time(), relative_gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuboptimalScore {
    pub analytic: f64,
    pub total: f64,
    /// (analytic − total) / |analytic|; positive when the policy does worse.
    pub shortfall: f64,
}

/// Score a competing policy by its truncated payoff plus the analytic value
/// of where it ends up. Domain exits of the competitor are tolerated as long
/// as its running payoff stays defined.
pub fn suboptimal_check<M: ControlledModel>(
    model: &M,
    x0: &M::State,
    policy: &Policy<'_, M>,
    t_end: f64,
    dt: f64,
) -> Result<SuboptimalScore> {
    let optimal = rollout_optimal(model, x0, 0.0, dt, OnDomainExit::Abort)?;
    let analytic = model.value(&optimal.states[0])?;
    let traj = rollout(model, x0, policy, t_end, dt, OnDomainExit::Record)?;
    let total = traj.total_payoff() + tail_of(model, &traj)?;
    Ok(SuboptimalScore { analytic, total, shortfall: (analytic - total) / analytic.abs() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DppCheck {
    pub r: f64,
    pub relative_gap: f64,
}

/// Equality case of the dynamic programming principle over [0, r] along the
/// feedback.
pub fn dpp_check<M: ControlledModel>(model: &M, x0: &M::State, r: f64, dt: f64) -> Result<DppCheck> {
    let m = value_match(model, x0, r, dt)?;
    Ok(DppCheck { r: m.t_end, relative_gap: m.relative_gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transversality {
    /// Log-slope of t ↦ e^{−ρt}|v(y(t))| over the last quarter of the run.
    pub slope: f64,
    pub final_discounted_value: f64,
    /// Slope within `flat_tol` of zero or positive.
    pub flagged: bool,
}

pub fn transversality<M: ControlledModel>(
    model: &M,
    traj: &Trajectory<M::State, M::Control>,
    flat_tol: f64,
) -> Result<Transversality> {
    let n = traj.len();
    if n < 8 {
        return Err(Error::TooCoarse { what: "trajectory points for transversality", min: 8, got: n });
    }
    let rho = model.discount();
    let mut t = Vec::new();
    let mut y = Vec::new();
    for k in (3 * n / 4)..n {
        let v = model.value(&traj.states[k])?;
        t.push(traj.times[k]);
        y.push(-rho * traj.times[k] + v.abs().ln());
    }
    let slope = regression_slope(&t, &y);
    let final_discounted_value = (*y.last().expect("nonempty")).exp();
    Ok(Transversality { slope, final_discounted_value, flagged: slope > -flat_tol })
}
