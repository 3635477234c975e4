//! Model objects built from a scenario, and seeded random test states.

use std::f64::consts::PI;

use hjbex::gridcore::{AgeField, CircleGrid, Field, HistorySegment};
use hjbex::models::pollution::{build_pollution_spec, PollutionFields, PollutionSpec};
use hjbex::models::spatial_growth::{build_spatial_spec, SpatialGrowthSpec};
use hjbex::models::time_to_build::{build_ttb_spec, lift_ttb, feedback_ttb, TtbSpec};
use hjbex::models::vintage_dde::{build_vintage_spec, feedback_vintage, lift_vintage, VintageSpec};
use hjbex::models::vintage_transport::{build_transport_spec, transport_grid, TransportData, TransportSpec};
use hjbex::models::DelayState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{ModelConfig, ScenarioConfig};
use crate::error::CliError;

pub enum Scenario {
    Spatial { spec: SpatialGrowthSpec, x0: Field },
    Pollution { spec: PollutionSpec, x0: Field },
    Vintage { spec: VintageSpec, x0: DelayState },
    Transport { spec: TransportSpec, x0: AgeField },
    TimeToBuild { spec: TtbSpec, x0: DelayState },
}

/// Build the model at the scenario's resolution. `lag_cells` overrides the
/// lag resolution of the delay models.
pub fn build(cfg: &ScenarioConfig, lag_cells: Option<usize>) -> Result<Scenario, CliError> {
    let num = &cfg.numerics;
    let m = lag_cells.unwrap_or(num.m);
    Ok(match &cfg.model {
        ModelConfig::SpatialGrowth(c) => {
            let g = CircleGrid::new(num.n)?;
            let spec = build_spatial_spec(
                c.productivity.sample(g, "productivity")?,
                c.population.sample(g, "population")?,
                c.sigma,
                c.rho,
                g,
            )?;
            Scenario::Spatial { spec, x0: c.initial.sample(g, "initial")? }
        }
        ModelConfig::Pollution(c) => {
            let g = CircleGrid::new(num.n)?;
            let fields = PollutionFields {
                sigma_diff: c.diffusion.sample(g, "diffusion")?,
                delta_dec: c.decay.sample(g, "decay")?,
                eta: c.emission.sample(g, "emission")?,
                a_prod: c.productivity.sample(g, "productivity")?,
                gamma: c.gamma.sample(g, "gamma")?,
                w_dis: c.disutility.sample(g, "disutility")?,
            };
            Scenario::Pollution { spec: build_pollution_spec(fields, c.rho)?, x0: c.initial.sample(g, "initial")? }
        }
        ModelConfig::VintageDde(c) => {
            let spec = build_vintage_spec(c.productivity, c.scrapping_time, c.sigma, c.rho)?;
            let iota = c.investment_history.sample(c.scrapping_time, m, "investment_history")?;
            let head = c.capital.unwrap_or_else(|| iota.integral());
            Scenario::Vintage { spec, x0: DelayState { head, controls: iota } }
        }
        ModelConfig::VintageTransport(c) => {
            let g = transport_grid(c.max_age, c.rho, c.mu, num.age_cells)?;
            let data = TransportData {
                alpha: c.revenue.sample(g, "revenue")?,
                q1: c.price.sample(g, "price")?,
                beta1: c.adjustment.sample(g, "adjustment")?,
                q0: c.boundary_price,
                beta0: c.boundary_adjustment,
            };
            Scenario::Transport { spec: build_transport_spec(c.mu, c.rho, data)?, x0: c.initial.sample(g, "initial")? }
        }
        ModelConfig::TimeToBuild(c) => {
            let spec = build_ttb_spec(c.productivity, c.depreciation, c.lag, c.sigma, c.rho)?;
            let u = c.control_history.sample(c.lag, m, "control_history")?;
            Scenario::TimeToBuild { spec, x0: DelayState { head: c.output, controls: u } }
        }
    })
}

impl Scenario {
    /// Default simulated horizon of each model.
    pub fn default_horizon(&self) -> f64 {
        match self {
            Scenario::Spatial { .. } | Scenario::Pollution { .. } => 100.0,
            Scenario::Vintage { spec, .. } => 10.0 * spec.t_scrap,
            Scenario::Transport { spec, .. } => 5.0 * spec.grid().sbar(),
            Scenario::TimeToBuild { spec, .. } => 20.0 * spec.d,
        }
    }

    /// Derived constants reported in summaries.
    pub fn derived(&self) -> Value {
        match self {
            Scenario::Spatial { spec, .. } => json!({
                "lambda0": spec.eigen.lambda0,
                "eigen_residual": spec.eigen.residual,
                "alpha0": spec.alpha0,
                "growth_rate": spec.growth_rate(),
            }),
            Scenario::Pollution { spec, .. } => json!({
                "alpha_mean": spec.alpha_shadow.values().iter().sum::<f64>() / spec.alpha_shadow.len() as f64,
                "alpha_min": spec.alpha_shadow.min(),
                "alpha_max": spec.alpha_shadow.max(),
                "investment_min": spec.i_star.min(),
                "investment_max": spec.i_star.max(),
                "value_constant": spec.q_const,
            }),
            Scenario::Vintage { spec, .. } => json!({
                "xi": spec.xi.xi,
                "xi_residual": spec.xi.residual,
                "nu": spec.nu,
                "gain": spec.gain,
                "consumption_rate": spec.consumption_rate(),
                "growth_rate": spec.growth_rate(),
            }),
            Scenario::Transport { spec, .. } => json!({
                "abar0": spec.abar.at_zero(),
                "u0_star": spec.u0_star,
                "u1_star_at_zero": spec.u1_star.at_zero(),
                "max_age": spec.grid().sbar(),
                "positivity_condition": spec.positivity_ok,
                "value_constant": spec.value_constant(),
            }),
            Scenario::TimeToBuild { spec, .. } => json!({
                "xi": spec.xi.xi,
                "xi_residual": spec.xi.residual,
                "a_tilde": spec.a_tilde,
                "alpha": spec.alpha_mpc,
                "nu": spec.nu,
                "growth_rate": spec.growth_rate(),
            }),
        }
    }
}

/// Smooth random modulation 1 + Σ aₖcos(kx) + bₖsin(kx) with |aₖ|, |bₖ| ≤ `amp`.
#[derive(Debug, Clone)]
pub struct Modulation {
    cos: Vec<f64>,
    sin: Vec<f64>,
    /// Extra scalar factor for heads and levels.
    pub level: f64,
}

impl Modulation {
    pub fn draw(rng: &mut ChaCha8Rng, harmonics: usize, amp: f64) -> Self {
        let mut coef = || rng.random_range(-amp..amp);
        let cos = (0..harmonics).map(|_| coef()).collect();
        let sin = (0..harmonics).map(|_| coef()).collect();
        let level = 1.0 + coef();
        Self { cos, sin, level }
    }

    pub fn eval(&self, x: f64) -> f64 {
        1.0 + self
            .cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| {
                let kx = (k + 1) as f64 * x;
                a * kx.cos() + b * kx.sin()
            })
            .sum::<f64>()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random test state of the scenario's model, resolution independent.
pub enum TestState {
    Field(Field),
    Age(AgeField),
    Delay(DelayState),
}

/// Draw `count` in-domain states. Delay states out of the feedback domain
/// are redrawn; the sequence depends only on the seed.
pub fn random_states(scenario: &Scenario, seed: u64, count: usize) -> Result<Vec<TestState>, CliError> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count.max(1) {
            return Err(CliError::config("could not draw in-domain random states"));
        }
        let md = Modulation::draw(&mut r, 3, 0.1);
        let state = match scenario {
            Scenario::Spatial { x0, .. } | Scenario::Pollution { x0, .. } => {
                let g = x0.grid();
                TestState::Field(Field::from_fn(g, |t| md.level * md.eval(t)))
            }
            Scenario::Transport { x0, .. } => {
                let g = x0.grid();
                let sbar = g.sbar();
                TestState::Age(AgeField::from_fn(g, |s| md.level * md.eval(PI * s / sbar)))
            }
            Scenario::Vintage { spec, x0 } => {
                let d = x0.controls.delay();
                let base = x0.controls.integral() / d;
                let iota = HistorySegment::from_fn(d, x0.controls.m(), |s| base * md.eval(PI * s / d))?;
                let head = md.level * iota.integral();
                let lifted = lift_vintage(Some(head), &iota)?;
                if feedback_vintage(spec, &lifted).is_err() {
                    continue;
                }
                TestState::Delay(DelayState { head, controls: iota })
            }
            Scenario::TimeToBuild { spec, x0 } => {
                let d = x0.controls.delay();
                let base = x0.controls.integral() / d;
                let u = HistorySegment::from_fn(d, x0.controls.m(), |s| base * md.eval(PI * s / d))?;
                let head = md.level * x0.head;
                if feedback_ttb(spec, &lift_ttb(spec, head, &u)?).is_err() {
                    continue;
                }
                TestState::Delay(DelayState { head, controls: u })
            }
        };
        out.push(state);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_every_default() {
        for name in ScenarioConfig::MODELS {
            let mut cfg = ScenarioConfig::default_for(name).unwrap();
            cfg.numerics.n = 64;
            cfg.numerics.m = 40;
            cfg.numerics.age_cells = 40;
            let s = build(&cfg, None).unwrap();
            assert!(s.default_horizon() > 0.0);
            assert!(s.derived().is_object());
            let a = random_states(&s, 7, 3).unwrap();
            let b = random_states(&s, 7, 3).unwrap();
            assert_eq!(a.len(), 3);
            for (x, y) in a.iter().zip(&b) {
                match (x, y) {
                    (TestState::Field(x), TestState::Field(y)) => assert_eq!(x, y),
                    (TestState::Age(x), TestState::Age(y)) => assert_eq!(x, y),
                    (TestState::Delay(x), TestState::Delay(y)) => assert_eq!(x, y),
                    _ => panic!("kind changed"),
                }
            }
        }
    }

    #[test]
    fn assumption_errors_surface() {
        let mut cfg = ScenarioConfig::default_for("vintage-dde").unwrap();
        if let ModelConfig::VintageDde(c) = &mut cfg.model {
            c.scrapping_time = 0.9;
        }
        let err = build(&cfg, None).err().unwrap();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("A*T > 1"), "{err}");
    }
}
