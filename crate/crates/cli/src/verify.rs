//! The verification suite of one scenario.

use hjbex::control::{rollout_optimal, ControlVector, ControlledModel, OnDomainExit};
use hjbex::exec::Exec;
use hjbex::gridcore::{inner_product, HistorySegment, Trajectory};
use hjbex::hjbverify::{
    dpp_check, sample_residuals, settled_start, suboptimal_check, transversality, value_match_along, Check, ResidualStats,
    VerifyReport,
};
use hjbex::models::pollution::hjb_residual_pollution;
use hjbex::models::spatial_growth::hjb_residual_spatial;
use hjbex::models::time_to_build::{
    capital_path, gamma_ttb, hjb_residual_ttb, openloop_control_path, openloop_dde_residual, simulate_ttb,
    to_output_coords, TtbSpec,
};
use hjbex::models::DelayState;
use hjbex::models::vintage_dde::{gamma0, hjb_residual_vintage, interior_condition, positivity_kernel, simulate_vintage};
use hjbex::models::vintage_transport::{hjb_residual_transport, optimal_trajectory_closed_form, simulate_transport_optimal};
use hjbex::scalar::{bracketed_root, regression_slope};
use rand::Rng;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::scenario::{build, random_states, rng, Scenario, TestState};

fn scale<C: ControlVector, S>(_y: &S, u: C, f: f64) -> C {
    u.scaled(f)
}

/// Least ratio between residuals at two resolutions that counts as halving.
const REFINEMENT_RATIO: f64 = 1.8;
/// Least ratio for the first-order closed-form comparison.
const LINEAR_RATIO: f64 = 1.6;

fn residuals(scenario: &Scenario, seed: u64, count: usize, exec: Exec) -> Result<ResidualStats, CliError> {
    let states = random_states(scenario, seed, count)?;
    let stats = sample_residuals(exec, &states, |s| match (scenario, s) {
        (Scenario::Spatial { spec, .. }, TestState::Field(x)) => hjb_residual_spatial(spec, x),
        (Scenario::Pollution { spec, .. }, TestState::Field(x)) => hjb_residual_pollution(spec, x),
        (Scenario::Transport { spec, .. }, TestState::Age(x)) => hjb_residual_transport(spec, x),
        (Scenario::Vintage { spec, .. }, TestState::Delay(x)) => hjb_residual_vintage(spec, &spec.lift(x)?),
        (Scenario::TimeToBuild { spec, .. }, TestState::Delay(x)) => hjb_residual_ttb(spec, &spec.lift(x)?),
        _ => unreachable!("states are drawn for their own model"),
    })?;
    Ok(stats)
}

fn growth_fit(times: &[f64], values: &[f64]) -> f64 {
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    regression_slope(times, &logs)
}

/// Competitor control from the state, the feedback control and a factor.
type Perturb<'a, M> =
    dyn Fn(&<M as ControlledModel>::State, <M as ControlledModel>::Control, f64) -> <M as ControlledModel>::Control + Sync + 'a;

/// Checks shared by all models: value matching, competing policies, the
/// dynamic programming identity and transversality. Returns the feedback run.
#[allow(clippy::too_many_arguments)]
fn common_checks<M: ControlledModel>(
    model: &M,
    perturb: &Perturb<'_, M>,
    x0: &M::State,
    t_end: f64,
    dt: f64,
    cfg: &ScenarioConfig,
    seed: u64,
    exec: Exec,
    report: &mut VerifyReport,
) -> Result<Trajectory<M::State, M::Control>, CliError> {
    let tol = &cfg.tolerances;
    let traj = rollout_optimal(model, x0, t_end, dt, OnDomainExit::Abort)?;
    let vm = value_match_along(model, &traj)?;
    report.push(
        Check::at_most("value_match_gap", vm.relative_gap, tol.value_match)
            .with_note(format!("analytic {:.10e}, truncated {:.10e}, tail {:.10e}", vm.analytic, vm.truncated, vm.tail)),
    );

    let mut r = rng(seed ^ 0x5eed);
    let mut factors = vec![0.5];
    while factors.len() < 1 + cfg.numerics.perturbations {
        let f: f64 = r.random_range(0.75..1.25);
        if (f - 1.0).abs() >= 0.05 {
            factors.push(f);
        }
    }
    let scores = exec.map(&factors, |&f| {
        let policy = move |_t: f64, y: &M::State| model.feedback(y).map(|u| perturb(y, u, f));
        suboptimal_check(model, x0, &policy, t_end, dt)
    });
    for (k, (f, score)) in factors.iter().zip(scores).enumerate() {
        let score = score?;
        let note = format!("factor {f:.6}, total {:.10e}", score.total);
        let check = if k == 0 {
            Check::above("suboptimal_half_shortfall", score.shortfall, tol.value_match)
        } else {
            Check::above(format!("suboptimal_random_{k}_shortfall"), score.shortfall, -tol.value_match)
        };
        report.push(check.with_note(note));
    }

    let r_dpp = (0.1 * t_end / dt).round().max(1.0) * dt;
    let dpp = dpp_check(model, x0, r_dpp, dt)?;
    report.push(Check::at_most("dpp_gap", dpp.relative_gap, tol.dpp).with_note(format!("r = {}", dpp.r)));

    let tr = transversality(model, &traj, 1e-4)?;
    report.push(
        Check::at_most("transversality_slope", tr.slope, -1e-4)
            .with_note(format!("final discounted value {:.6e}", tr.final_discounted_value)),
    );
    Ok(traj)
}

pub fn verify(cfg: &ScenarioConfig, seed: u64, exec: Exec) -> Result<VerifyReport, CliError> {
    let tol = cfg.tolerances.clone();
    let scenario = build(cfg, None)?;
    let refined_cfg = cfg.refined(1);
    let refined = build(&refined_cfg, None)?;
    let mut report = VerifyReport::new(cfg.model.name());

    let coarse = residuals(&scenario, seed, cfg.numerics.samples, exec)?;
    let fine = residuals(&refined, seed, cfg.numerics.samples, exec)?;
    report.push(
        Check::at_most("hjb_residual_max", coarse.max, tol.residual)
            .with_note(format!("{} states, mean {:.3e}", coarse.count, coarse.mean)),
    );
    report.push(
        Check::above("hjb_residual_refinement_ratio", coarse.max / fine.max, REFINEMENT_RATIO)
            .with_note(format!("refined max {:.3e}", fine.max)),
    );

    let t_end = cfg.numerics.t_end.unwrap_or_else(|| scenario.default_horizon());
    let dt = cfg.numerics.dt;
    match &scenario {
        Scenario::Spatial { spec, x0 } => {
            let traj = common_checks(spec, &scale, x0, t_end, dt, cfg, seed, exec, &mut report)?;
            let pairing = traj.states.iter().map(|y| inner_product(y, &spec.beta)).collect::<Result<Vec<_>, _>>()?;
            let g = growth_fit(&traj.times, &pairing);
            report.push(
                Check::at_most("growth_rate_gap", (g - spec.growth_rate()).abs(), tol.growth_rate)
                    .with_note(format!("fitted {g:.8}, derived {:.8}", spec.growth_rate())),
            );
            let min = traj.states.iter().map(|y| y.min()).fold(f64::INFINITY, f64::min);
            report.push(Check::above("min_capital", min, 0.0));
        }
        Scenario::Pollution { spec, x0 } => {
            let traj = common_checks(spec, &scale, x0, t_end, dt, cfg, seed, exec, &mut report)?;
            let min = traj.states.iter().map(|y| y.min()).fold(f64::INFINITY, f64::min);
            report.push(Check::above("min_pollution", min, -1e-10));
            let f = &spec.fields;
            let mut worst = 0.0f64;
            for j in 0..spec.grid().n() {
                let (a, g) = (f.a_prod.values()[j], f.gamma.values()[j]);
                let price = f.eta.values()[j] * spec.alpha_shadow.values()[j];
                let marginal = |i: f64| (a - 1.0).powf(1.0 - g) * i.powf(-g) - price;
                let slope = |i: f64| -g * (a - 1.0).powf(1.0 - g) * i.powf(-g - 1.0);
                let root = bracketed_root(marginal, slope, 1e-12, 1e12)?;
                worst = worst.max((root - spec.i_star.values()[j]).abs() / root);
            }
            report.push(Check::at_most("investment_foc_gap", worst, 1e-8));
        }
        Scenario::Vintage { spec, x0 } => {
            let run = simulate_vintage(spec, &x0.controls, Some(x0.head), t_end.max(10.0 * spec.t_scrap))?;
            // Scaling consumption rather than investment keeps the competitors admissible.
            let thrift = |y: &DelayState, i: f64, f: f64| spec.a * y.head - f * (spec.a * y.head - i);
            common_checks(spec, &thrift, x0, t_end, x0.controls.spacing(), cfg, seed, exec, &mut report)?;
            let tr = &run.trajectory;
            let gammas = tr.states.iter().map(|y| Ok(gamma0(&spec.lift(y)?, spec.xi.xi))).collect::<Result<Vec<_>, CliError>>()?;
            let g = growth_fit(&tr.times, &gammas);
            report.push(
                Check::at_most("growth_rate_gap", (g - spec.growth_rate()).abs(), tol.growth_rate)
                    .with_note(format!("fitted {g:.8}, derived {:.8}", spec.growth_rate())),
            );
            report.push(Check::above("min_investment", run.min_investment, 0.0));
            report.push(Check::above("min_capital", run.min_capital, 0.0));
            if interior_condition(spec) {
                let kernel = (0..=200)
                    .map(|k| positivity_kernel(spec, -spec.t_scrap * k as f64 / 200.0))
                    .fold(f64::INFINITY, f64::min);
                report.push(Check::above("positivity_kernel_min", kernel, 0.0));
            }
        }
        Scenario::Transport { spec, x0 } => {
            common_checks(spec, &scale, x0, t_end, spec.grid().spacing(), cfg, seed, exec, &mut report)?;
            let run = simulate_transport_optimal(spec, x0, t_end)?;
            if spec.positivity_ok && x0.min() >= 0.0 {
                report.push(Check::above("min_density", run.min_state, -1e-12));
            }
            let half = 0.5 * spec.grid().sbar();
            let gap = |s: &Scenario| -> Result<f64, CliError> {
                let Scenario::Transport { spec, x0 } = s else { unreachable!() };
                let run = simulate_transport_optimal(spec, x0, half)?;
                let cf = optimal_trajectory_closed_form(spec, x0, run.trajectory.final_time())?;
                Ok(cf.zip_with(run.trajectory.final_state(), |a, b| a - b)?.max_abs())
            };
            let (g1, g2) = (gap(&scenario)?, gap(&refined)?);
            let h = spec.grid().spacing();
            report.push(
                Check::above("closed_form_refinement_ratio", g1 / g2, LINEAR_RATIO)
                    .with_note(format!("gap {g1:.4e} at h = {h}, {g2:.4e} at h/2; constant {:.4}", g1 / h)),
            );
        }
        Scenario::TimeToBuild { spec, x0 } => {
            let traj = common_checks(spec, &scale, x0, t_end, x0.controls.spacing(), cfg, seed, exec, &mut report)?;
            let run = simulate_ttb(spec, x0.head, &x0.controls, t_end)?;
            let gammas = traj.states.iter().map(|y| Ok(gamma_ttb(&spec.lift(y)?, spec.xi.xi))).collect::<Result<Vec<_>, CliError>>()?;
            let g = growth_fit(&traj.times, &gammas);
            report.push(
                Check::at_most("growth_rate_gap", (g - spec.growth_rate()).abs(), tol.growth_rate)
                    .with_note(format!("fitted {g:.8}, derived {:.8}", spec.growth_rate())),
            );
            report.push(Check::above("min_consumption", run.min_consumption, 0.0));
            let dde = openloop_dde_residual(spec, &traj)?;
            report.push(Check::at_most("openloop_dde_residual", dde, 1e-2));
            let window = 2.0 * spec.d;
            let path = openloop_control_path(spec, &traj.states[0].controls, window)?;
            let cross = path.iter().zip(&traj.controls).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            report.push(Check::at_most("openloop_feedback_gap", cross, 1e-4));
            report.push(Check::at_most("dual_coordinates_gap", dual_coordinates_gap(spec, x0)?, 1e-6));
        }
    }
    Ok(report)
}

/// Rebuild the capital history behind the settled initial window, map it
/// back to output coordinates, run the feedback over [0, 2d] and drive the
/// capital equation with the resulting consumption; returns the largest
/// |A k(t − d) − q(t)|.
pub fn dual_coordinates_gap(spec: &TtbSpec, x0: &DelayState) -> Result<f64, CliError> {
    let u = settled_start(spec, x0, x0.controls.spacing())?.controls;
    let dt = u.spacing();
    let ratio = spec.a_tilde / spec.a;
    let mut k = vec![x0.head / spec.a];
    for j in 0..u.m() {
        k.push(k[j] + ratio * 0.5 * dt * (u.get(j) + u.get(j + 1)));
    }
    let k_hist = HistorySegment::new(spec.d, k)?;
    let k_dot = u.map(|v| ratio * v);
    let (q0, u0) = to_output_coords(spec, &k_hist, Some(&k_dot))?;
    let run = simulate_ttb(spec, q0, &u0, 2.0 * spec.d)?;
    let tr = &run.trajectory;
    let c: Vec<f64> = tr.states.iter().zip(&tr.controls).map(|(y, u)| ratio * (y.head - u)).collect();
    let cap = capital_path(spec, &k_hist, &c);
    Ok(tr.states.iter().enumerate().map(|(n, y)| (spec.a * cap[n] - y.head).abs()).fold(0.0, f64::max))
}
