use serde::Serialize;

use crate::control::{closed_loop_step, ControlledModel, OnDomainExit};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::models::DelayState;
use crate::scalar::regression_slope;

/// A discrete-time control problem on a locked time step, with a scalar
/// control chosen for the end of each step. There is deliberately no value
/// function here: the oracle only sees dynamics and payoffs.
pub trait DpProblem: Sync {
    type State: Clone + Send + Sync;

    fn discount(&self) -> f64;

    fn dt(&self) -> f64;

    /// Center of the explored control range for the next step.
    fn center(&self, state: &Self::State) -> Result<f64>;

    /// Advance one step, applying `u_next` at the end of the step.
    fn step(&self, state: &Self::State, u_next: f64) -> Result<Self::State>;

    /// Running payoff at a state carrying its current control.
    fn running_payoff(&self, state: &Self::State) -> Result<f64>;

    /// Scalar summary used to bin states.
    fn aggregate(&self, state: &Self::State) -> f64;
}

/// [`DpProblem`] view of a delay model whose control is the newest window
/// sample. The tube center is the model's own closed-loop feedback, and the
/// current control if the feedback is undefined.
///
/// States are binned by `head + pipeline·∫window`. A nonzero `pipeline` adds
/// the part of the head already committed by past controls, which matters
/// when the head itself only reacts after the full lag.
pub struct DelayDp<'a, M> {
    model: &'a M,
    dt: f64,
    pipeline: f64,
}

impl<'a, M> DelayDp<'a, M>
where
    M: ControlledModel<State = DelayState, Control = f64>,
{
    pub fn new(model: &'a M, dt: f64) -> Self {
        Self { model, dt, pipeline: 0.0 }
    }

    pub fn with_pipeline(model: &'a M, dt: f64, pipeline: f64) -> Self {
        Self { model, dt, pipeline }
    }
}

impl<M> DpProblem for DelayDp<'_, M>
where
    M: ControlledModel<State = DelayState, Control = f64>,
{
    type State = DelayState;

    fn discount(&self) -> f64 {
        self.model.discount()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn center(&self, state: &DelayState) -> Result<f64> {
        let u = state.controls.newest();
        let policy = |_t: f64, y: &DelayState| self.model.feedback(y);
        match closed_loop_step(self.model, state, &u, &policy, 0.0, self.dt) {
            Ok((_, next)) => Ok(next),
            Err(_) => Ok(u),
        }
    }

    fn step(&self, state: &DelayState, u_next: f64) -> Result<DelayState> {
        self.model.step(state, &state.controls.newest(), &u_next, self.dt)
    }

    fn running_payoff(&self, state: &DelayState) -> Result<f64> {
        self.model.running_payoff(state, &state.controls.newest())
    }

    fn aggregate(&self, state: &DelayState) -> f64 {
        state.head + self.pipeline * state.controls.integral()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DpOptions {
    /// Number of control levels per step; also the number of state bins.
    pub levels: usize,
    /// Relative half-width of the control range around the tube center.
    pub control_width: f64,
    /// Relative half-width of the aggregate range kept per step.
    pub bin_width: f64,
    /// Horizon in e-foldings of the discounted payoff density.
    pub e_foldings: f64,
    /// Length of the pilot run used to measure that decay, in steps.
    pub pilot_steps: usize,
    /// Largest number of (step, bin, level) evaluations allowed.
    pub budget: usize,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self { levels: 33, control_width: 0.2, bin_width: 0.05, e_foldings: 5.0, pilot_steps: 160, budget: 4_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    /// Backward dynamic-programming value over the tube, zero terminal value.
    pub dp_value: f64,
    /// Payoff of the greedy policy for that value function on the true dynamics.
    pub rollout_value: f64,
    pub bracket: (f64, f64),
    /// Payoff of the tube-center policy alone.
    pub center_value: f64,
    /// Geometric extrapolation of the neglected payoff beyond the horizon.
    pub tail_estimate: f64,
    /// Measured decay rate of the discounted payoff density.
    pub decay_rate: f64,
    pub t_end: f64,
    pub steps: usize,
    pub evaluations: usize,
}

impl OracleReport {
    /// Whether `value` lies in the bracket widened by `rel` of |value|.
    pub fn contains(&self, value: f64, rel: f64) -> bool {
        let slack = rel * value.abs();
        value >= self.bracket.0 - slack && value <= self.bracket.1 + slack
    }
}

struct Node<S> {
    state: S,
    /// Discounted running payoff at this node.
    payoff: f64,
}

/// Child node landing in a bin, ranked by (distance to the bin center, |level|).
type Candidate<S> = (usize, (f64, f64), Node<S>);
type Slot<S> = Option<((f64, f64), Node<S>)>;

struct Edge {
    bin: usize,
    reward: f64,
}

fn levels(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|j| -1.0 + 2.0 * j as f64 / (n - 1) as f64).collect()
}

fn bin_centers(n: usize, width: f64) -> Vec<f64> {
    levels(n).into_iter().map(|l| l * width).collect()
}

/// Nearest bin index for relative deviation `z`, if within range.
fn bin_of(z: f64, centers: &[f64], width: f64) -> Option<usize> {
    let n = centers.len();
    let spacing = if n > 1 { 2.0 * width / (n - 1) as f64 } else { 2.0 * width };
    if !z.is_finite() || z.abs() > width + 0.5 * spacing {
        return None;
    }
    if n == 1 {
        return Some(0);
    }
    Some((((z + width) / spacing).round() as usize).min(n - 1))
}

/// Center-policy path: states and discounted payoffs.
fn center_path<P: DpProblem>(p: &P, x0: &P::State, steps: usize) -> Result<(Vec<P::State>, Vec<f64>)> {
    let rho = p.discount();
    let dt = p.dt();
    let mut states = vec![x0.clone()];
    let mut density = vec![p.running_payoff(x0)?];
    for n in 0..steps {
        let y = &states[n];
        let next = p.step(y, p.center(y)?)?;
        density.push((-rho * (n + 1) as f64 * dt).exp() * p.running_payoff(&next)?);
        states.push(next);
    }
    Ok((states, density))
}

fn trapezoid(dt: f64, density: &[f64]) -> f64 {
    density.windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).sum()
}

/// Decay rate of the discounted payoff density over the second half of a
/// pilot run of the center policy.
fn pilot_decay<P: DpProblem>(p: &P, x0: &P::State, steps: usize) -> Result<f64> {
    let (_, density) = center_path(p, x0, steps)?;
    let dt = p.dt();
    let (t, y): (Vec<f64>, Vec<f64>) =
        density.iter().enumerate().skip(steps / 2).map(|(k, g)| (k as f64 * dt, g.abs().ln())).unzip();
    let rate = regression_slope(&t, &y);
    if !(rate < 0.0) {
        return Err(Error::param("pilot", format!("discounted payoff does not decay (rate {rate})")));
    }
    Ok(rate)
}

/// Local dynamic programming over a tube of states around the center-policy
/// path, started at `x0` (which must carry its current control).
///
/// At every step each retained state tries `levels` controls spread over
/// ±`control_width` around its tube center. Children are binned by their
/// aggregate relative to the center path and the child nearest each bin
/// center represents the bin at the next step. A backward sweep with zero
/// terminal value yields the DP value; a forward greedy pass on the exact
/// dynamics yields an attainable payoff. The horizon spans `e_foldings` of the
/// measured payoff decay, and the neglected remainder is reported separately.
pub fn brute_force_value<P: DpProblem>(p: &P, x0: &P::State, opts: &DpOptions, exec: Exec) -> Result<OracleReport> {
    if opts.levels == 0 {
        return Err(Error::param("levels", "need at least one control level"));
    }
    let dt = p.dt();
    let rho = p.discount();
    let decay_rate = pilot_decay(p, x0, opts.pilot_steps)?;
    let steps = ((opts.e_foldings / -decay_rate) / dt).ceil() as usize;
    let evaluations = steps.saturating_mul(opts.levels).saturating_mul(opts.levels);
    if evaluations > opts.budget {
        return Err(Error::BudgetExceeded { needed: evaluations, limit: opts.budget });
    }
    let (reference, density) = center_path(p, x0, steps)?;
    let center_value = trapezoid(dt, &density);
    let last = density[steps];
    let tail_estimate = last / -decay_rate;

    let ell = levels(opts.levels);
    let centers = bin_centers(opts.levels, opts.bin_width);
    let disc = |n: usize| (-rho * n as f64 * dt).exp();

    // Forward tube construction; ties in distance to a bin center go to the
    // control nearest the tube center.
    let mut layers: Vec<Vec<Option<Node<P::State>>>> = Vec::with_capacity(steps + 1);
    let mut edges: Vec<Vec<Vec<Edge>>> = Vec::with_capacity(steps);
    let mut first: Vec<Option<Node<P::State>>> = (0..opts.levels).map(|_| None).collect();
    let start_bin = bin_of(0.0, &centers, opts.bin_width).expect("zero is in range");
    first[start_bin] = Some(Node { state: x0.clone(), payoff: p.running_payoff(x0)? });
    layers.push(first);
    for n in 0..steps {
        let agg_ref = p.aggregate(&reference[n + 1]);
        let layer = &layers[n];
        let children: Vec<Vec<Candidate<P::State>>> = exec.map_range(layer.len(), |b| {
            let Some(node) = &layer[b] else { return Vec::new() };
            let Ok(center) = p.center(&node.state) else { return Vec::new() };
            ell.iter()
                .filter_map(|&l| {
                    let y = p.step(&node.state, center * (1.0 + opts.control_width * l)).ok()?;
                    let g = p.running_payoff(&y).ok().filter(|g| g.is_finite())?;
                    let z = p.aggregate(&y) / agg_ref - 1.0;
                    let bin = bin_of(z, &centers, opts.bin_width)?;
                    let dist = ((z - centers[bin]).abs(), l.abs());
                    Some((bin, dist, Node { state: y, payoff: disc(n + 1) * g }))
                })
                .collect()
        });
        let mut next: Vec<Slot<P::State>> = (0..opts.levels).map(|_| None).collect();
        let mut layer_edges: Vec<Vec<Edge>> = (0..opts.levels).map(|_| Vec::new()).collect();
        for (b, kids) in children.into_iter().enumerate() {
            let Some(parent) = &layer[b] else { continue };
            for (bin, dist, node) in kids {
                let reward = 0.5 * dt * (parent.payoff + node.payoff);
                layer_edges[b].push(Edge { bin, reward });
                if next[bin].as_ref().is_none_or(|(d, _)| dist < *d) {
                    next[bin] = Some((dist, node));
                }
            }
        }
        layers.push(next.into_iter().map(|e| e.map(|(_, node)| node)).collect());
        edges.push(layer_edges);
    }

    // Backward sweep with zero terminal value.
    let mut value: Vec<Vec<f64>> = vec![vec![f64::NEG_INFINITY; opts.levels]; steps + 1];
    for (b, node) in layers[steps].iter().enumerate() {
        if node.is_some() {
            value[steps][b] = 0.0;
        }
    }
    for n in (0..steps).rev() {
        for b in 0..opts.levels {
            let best = edges[n][b]
                .iter()
                .map(|e| e.reward + value[n + 1][e.bin])
                .fold(f64::NEG_INFINITY, f64::max);
            value[n][b] = best;
        }
    }
    let dp_value = value[0][start_bin];
    if !dp_value.is_finite() {
        return Err(Error::Domain("no admissible path through the tube".into()));
    }

    // Greedy pass on the exact dynamics.
    let mut y = x0.clone();
    let mut payoff = p.running_payoff(x0)?;
    let mut rollout_value = 0.0;
    for n in 0..steps {
        let agg_ref = p.aggregate(&reference[n + 1]);
        let center = p.center(&y)?;
        let options: Vec<Option<(f64, P::State, f64)>> = exec.map(&ell, |l| {
            let child = p.step(&y, center * (1.0 + opts.control_width * l)).ok()?;
            let g = disc(n + 1) * p.running_payoff(&child).ok().filter(|g| g.is_finite())?;
            let bin = bin_of(p.aggregate(&child) / agg_ref - 1.0, &centers, opts.bin_width)?;
            let score = 0.5 * dt * (payoff + g) + value[n + 1][bin];
            score.is_finite().then_some((score, child, g))
        });
        let best = options
            .into_iter()
            .flatten()
            .fold(None, |acc: Option<(f64, P::State, f64)>, c| match acc {
                Some(a) if a.0 >= c.0 => Some(a),
                _ => Some(c),
            });
        let (child, g) = match best {
            Some((_, child, g)) => (child, g),
            None => {
                let child = p.step(&y, center)?;
                let g = disc(n + 1) * p.running_payoff(&child)?;
                (child, g)
            }
        };
        rollout_value += 0.5 * dt * (payoff + g);
        payoff = g;
        y = child;
    }

    let bracket = (dp_value.min(rollout_value), dp_value.max(rollout_value));
    Ok(OracleReport {
        dp_value,
        rollout_value,
        bracket,
        center_value,
        tail_estimate,
        decay_rate,
        t_end: steps as f64 * dt,
        steps,
        evaluations,
    })
}

/// Settle the feedback at t = 0 so the initial window carries u(0).
pub fn settled_start<M>(model: &M, x0: &DelayState, dt: f64) -> Result<DelayState>
where
    M: ControlledModel<State = DelayState, Control = f64>,
{
    let traj = crate::control::rollout_optimal(model, x0, 0.0, dt, OnDomainExit::Record)?;
    Ok(traj.states[0].clone())
}
