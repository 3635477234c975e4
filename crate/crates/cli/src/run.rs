//! Closed-loop runs: trajectory table and summary.

use hjbex::control::ControlledModel;
use hjbex::gridcore::{inner_product, quad_circle, Trajectory};
use hjbex::models::spatial_growth::simulate_spatial;
use hjbex::models::pollution::simulate_pollution;
use hjbex::models::time_to_build::{gamma_ttb, simulate_ttb};
use hjbex::models::vintage_dde::{gamma0, simulate_vintage};
use hjbex::models::vintage_transport::simulate_transport_optimal;
use serde_json::{json, Value};

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::scenario::{build, Scenario};

pub struct RunOutput {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub summary: Value,
}

fn books<M: ControlledModel>(model: &M, traj: &Trajectory<M::State, M::Control>) -> Result<Value, CliError> {
    let analytic = model.value(&traj.states[0])?;
    let truncated = traj.total_payoff();
    let tail = (-model.discount() * traj.final_time()).exp() * model.value(traj.final_state())?;
    Ok(json!({
        "analytic_value": analytic,
        "simulated_payoff": truncated,
        "tail": tail,
        "value_gap": ((truncated + tail) - analytic).abs() / analytic.abs(),
        "t_end": traj.final_time(),
        "steps": traj.len() - 1,
        "domain_exit": traj.domain_exit.as_ref().map(|(t, why)| json!({ "t": t, "reason": why })),
    }))
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, CliError> {
    let scenario = build(cfg, None)?;
    let t_end = cfg.numerics.t_end.unwrap_or_else(|| scenario.default_horizon());
    let dt = cfg.numerics.dt;
    let (header, rows, results) = match &scenario {
        Scenario::Spatial { spec, x0 } => {
            let r = simulate_spatial(spec, x0, t_end, dt)?;
            let tr = &r.trajectory;
            let rows = (0..tr.len())
                .map(|k| {
                    let y = &tr.states[k];
                    Ok(vec![
                        tr.times[k],
                        quad_circle(y),
                        inner_product(y, &spec.beta)?,
                        y.min(),
                        quad_circle(&tr.controls[k]),
                        tr.running_payoff[k],
                        tr.discounted_payoff[k],
                    ])
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let extra = json!({
                "min_state": r.min_state,
                "first_negative": r.first_negative,
                "admissible": r.first_negative.is_none(),
            });
            (vec!["t", "capital", "pairing", "min_capital", "consumption", "running_payoff", "discounted_payoff"], rows, merge(books(spec, tr)?, extra))
        }
        Scenario::Pollution { spec, x0 } => {
            let r = simulate_pollution(spec, x0, t_end, dt)?;
            let tr = &r.trajectory;
            let rows = (0..tr.len())
                .map(|k| {
                    let y = &tr.states[k];
                    vec![tr.times[k], quad_circle(y), y.min(), y.max(), quad_circle(&tr.controls[k]), tr.running_payoff[k], tr.discounted_payoff[k]]
                })
                .collect();
            let extra = json!({ "min_state": r.min_state, "max_principle": r.max_principle_ok });
            (vec!["t", "pollution", "min_pollution", "max_pollution", "investment", "running_payoff", "discounted_payoff"], rows, merge(books(spec, tr)?, extra))
        }
        Scenario::Vintage { spec, x0 } => {
            let r = simulate_vintage(spec, &x0.controls, Some(x0.head), t_end)?;
            let tr = &r.trajectory;
            let rows = (0..tr.len())
                .map(|k| {
                    let y = &tr.states[k];
                    Ok(vec![tr.times[k], y.head, gamma0(&spec.lift(y)?, spec.xi.xi), tr.controls[k], tr.running_payoff[k], tr.discounted_payoff[k]])
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let extra = json!({ "min_investment": r.min_investment, "min_capital": r.min_capital });
            (vec!["t", "capital", "gamma", "investment", "running_payoff", "discounted_payoff"], rows, merge(books(spec, tr)?, extra))
        }
        Scenario::Transport { spec, x0 } => {
            let r = simulate_transport_optimal(spec, x0, t_end)?;
            let tr = &r.trajectory;
            let rows = (0..tr.len())
                .map(|k| {
                    let z = &tr.states[k];
                    let u = &tr.controls[k];
                    vec![tr.times[k], z.integral(), z.at_zero(), z.min(), u.boundary, u.distributed.integral(), tr.running_payoff[k], tr.discounted_payoff[k]]
                })
                .collect();
            let extra = json!({ "min_state": r.min_state, "positivity_condition": spec.positivity_ok });
            (
                vec!["t", "capital", "newest_vintage", "min_density", "boundary_investment", "distributed_investment", "running_payoff", "discounted_payoff"],
                rows,
                merge(books(spec, tr)?, extra),
            )
        }
        Scenario::TimeToBuild { spec, x0 } => {
            let r = simulate_ttb(spec, x0.head, &x0.controls, t_end)?;
            let tr = &r.trajectory;
            let rows = (0..tr.len())
                .map(|k| {
                    let y = &tr.states[k];
                    let consumption = spec.a_tilde / spec.a * (y.head - tr.controls[k]);
                    Ok(vec![tr.times[k], y.head, gamma_ttb(&spec.lift(y)?, spec.xi.xi), tr.controls[k], consumption, tr.running_payoff[k], tr.discounted_payoff[k]])
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let extra = json!({
                "consumption_payoff": r.consumption_payoff,
                "min_consumption": r.min_consumption,
                "irreversibility_band": r.band_ok,
            });
            (vec!["t", "output", "gamma", "control", "consumption", "running_payoff", "discounted_payoff"], rows, merge(books(spec, tr)?, extra))
        }
    };
    let summary = json!({
        "model": cfg.model.name(),
        "derived": scenario.derived(),
        "results": results,
        "config": cfg,
    });
    Ok(RunOutput { header, rows, summary })
}
