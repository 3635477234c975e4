//! Scenario files: one model with its parameters, numerics and tolerances.

use std::f64::consts::TAU;
use std::path::Path;

use hjbex::gridcore::{AgeField, AgeGrid, CircleGrid, Field, HistorySegment};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Profile of a coefficient on the circle, θ ∈ [0, 2π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    /// mean + amplitude·cos(kθ)
    Cosine { mean: f64, amplitude: f64, #[serde(default = "one")] harmonic: u32 },
    /// mean + amplitude·sin(kθ)
    Sine { mean: f64, amplitude: f64, #[serde(default = "one")] harmonic: u32 },
    /// Equispaced periodic samples, linearly interpolated onto the grid.
    Samples { values: Vec<f64> },
}

fn one() -> u32 {
    1
}

/// Periodic linear interpolation of equispaced samples.
fn periodic_interp(values: &[f64], theta: f64) -> f64 {
    let n = values.len();
    let x = theta.rem_euclid(TAU) / TAU * n as f64;
    let k = (x.floor() as usize) % n;
    let w = x - x.floor();
    (1.0 - w) * values[k] + w * values[(k + 1) % n]
}

impl Profile {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Cosine { mean, amplitude, harmonic } => mean + amplitude * (*harmonic as f64 * theta).cos(),
            Profile::Sine { mean, amplitude, harmonic } => mean + amplitude * (*harmonic as f64 * theta).sin(),
            Profile::Samples { values } => periodic_interp(values, theta),
        }
    }

    pub fn sample(&self, grid: CircleGrid, name: &str) -> Result<Field, CliError> {
        if let Profile::Samples { values } = self {
            if values.len() < 2 {
                return Err(CliError::config(format!("{name}: need at least two samples")));
            }
        }
        Ok(Field::from_fn(grid, |t| self.eval(t)))
    }
}

/// Profile on the age interval [0, s̄], in terms of r = 1 − s/s̄.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AgeProfile {
    Constant { value: f64 },
    /// Σ c_k r^k
    Falling { coefficients: Vec<f64> },
    /// Samples at equispaced ages including both ends, linearly interpolated.
    Samples { values: Vec<f64> },
}

impl AgeProfile {
    pub fn sample(&self, grid: AgeGrid, name: &str) -> Result<AgeField, CliError> {
        let sbar = grid.sbar();
        Ok(match self {
            AgeProfile::Constant { value } => AgeField::constant(grid, *value),
            AgeProfile::Falling { coefficients } => AgeField::from_fn(grid, |s| {
                let r = 1.0 - s / sbar;
                coefficients.iter().rev().fold(0.0, |acc, c| acc * r + c)
            }),
            AgeProfile::Samples { values } => {
                if values.len() < 2 {
                    return Err(CliError::config(format!("{name}: need at least two samples")));
                }
                let coarse = AgeField::new(AgeGrid::new(sbar, values.len() - 1).map_err(|_| {
                    CliError::config(format!("{name}: need at least five samples"))
                })?, values.clone())?;
                AgeField::from_fn(grid, |s| coarse.interpolate(s))
            }
        })
    }
}

/// History on [−d, 0] as a function of the lag s ≤ 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HistoryProfile {
    Constant { value: f64 },
    /// scale·e^{rate·s}
    Exponential { scale: f64, rate: f64 },
    /// Samples from oldest to newest, linearly interpolated.
    Samples { values: Vec<f64> },
}

impl HistoryProfile {
    pub fn sample(&self, delay: f64, m: usize, name: &str) -> Result<HistorySegment, CliError> {
        Ok(match self {
            HistoryProfile::Constant { value } => HistorySegment::constant(delay, m, *value)?,
            HistoryProfile::Exponential { scale, rate } => HistorySegment::from_fn(delay, m, |s| scale * (rate * s).exp())?,
            HistoryProfile::Samples { values } => {
                if values.len() < 2 {
                    return Err(CliError::config(format!("{name}: need at least two samples")));
                }
                let cells = (values.len() - 1) as f64;
                HistorySegment::from_fn(delay, m, |s| {
                    let x = ((s + delay) / delay * cells).clamp(0.0, cells);
                    let k = (x.floor() as usize).min(values.len() - 2);
                    let w = x - k as f64;
                    (1.0 - w) * values[k] + w * values[k + 1]
                })?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialConfig {
    pub productivity: Profile,
    pub population: Profile,
    pub sigma: f64,
    pub rho: f64,
    pub initial: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PollutionConfig {
    pub diffusion: Profile,
    pub decay: Profile,
    pub emission: Profile,
    pub productivity: Profile,
    pub gamma: Profile,
    pub disutility: Profile,
    pub rho: f64,
    pub initial: Profile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VintageConfig {
    pub productivity: f64,
    pub scrapping_time: f64,
    pub sigma: f64,
    pub rho: f64,
    pub investment_history: HistoryProfile,
    /// Initial capital; defaults to the integral of the investment history.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capital: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    pub mu: f64,
    pub rho: f64,
    /// Maximal age; omitted for unbounded ages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_age: Option<f64>,
    pub revenue: AgeProfile,
    pub price: AgeProfile,
    pub adjustment: AgeProfile,
    pub boundary_price: f64,
    pub boundary_adjustment: f64,
    pub initial: AgeProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeToBuildConfig {
    pub productivity: f64,
    pub depreciation: f64,
    pub lag: f64,
    pub sigma: f64,
    pub rho: f64,
    pub output: f64,
    pub control_history: HistoryProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ModelConfig {
    SpatialGrowth(SpatialConfig),
    Pollution(PollutionConfig),
    VintageDde(VintageConfig),
    VintageTransport(TransportConfig),
    TimeToBuild(TimeToBuildConfig),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::SpatialGrowth(_) => "spatial-growth",
            ModelConfig::Pollution(_) => "pollution",
            ModelConfig::VintageDde(_) => "vintage-dde",
            ModelConfig::VintageTransport(_) => "vintage-transport",
            ModelConfig::TimeToBuild(_) => "time-to-build",
        }
    }

    pub fn is_delay(&self) -> bool {
        matches!(self, ModelConfig::VintageDde(_) | ModelConfig::TimeToBuild(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Nodes on the circle.
    pub n: usize,
    /// Cells on the lag interval; fixes the time step of the delay models.
    pub m: usize,
    /// Cells on the age interval; fixes the time step of the transport model.
    pub age_cells: usize,
    /// Time step of the parabolic models.
    pub dt: f64,
    /// Simulated horizon; a model-specific default when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Random states for residual sampling.
    pub samples: usize,
    /// Competing policies besides the half feedback.
    pub perturbations: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self { n: 256, m: 400, age_cells: 400, dt: 0.01, t_end: None, samples: 10, perturbations: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub residual: f64,
    pub value_match: f64,
    pub dpp: f64,
    pub growth_rate: f64,
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { residual: 1e-5, value_match: 5e-3, dpp: 1e-3, growth_rate: 1e-3, oracle: 0.03 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub lag_cells: usize,
    pub levels: usize,
    pub control_width: f64,
    pub bin_width: f64,
    pub e_foldings: f64,
    pub budget: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let d = hjbex::hjbverify::DpOptions::default();
        Self {
            lag_cells: 8,
            levels: d.levels,
            control_width: d.control_width,
            bin_width: d.bin_width,
            e_foldings: d.e_foldings,
            budget: d.budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub oracle: OracleConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// JSON scenario, or a summary whose `config` member is one.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json");
        let parsed = if json { Self::from_json(&text) } else { Self::from_toml(&text) };
        parsed.map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Range checks that do not depend on the model's assumptions.
    pub fn validate(&self) -> Result<(), CliError> {
        let n = &self.numerics;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("numerics.dt", n.dt)?;
        if let Some(t) = n.t_end {
            positive("numerics.t_end", t)?;
        }
        if n.n < CircleGrid::MIN_NODES {
            return Err(CliError::config(format!("numerics.n must be at least {}", CircleGrid::MIN_NODES)));
        }
        if n.m < 4 || n.age_cells < AgeGrid::MIN_CELLS || self.oracle.lag_cells < 4 {
            return Err(CliError::config("numerics.m, numerics.age_cells and oracle.lag_cells must be at least 4"));
        }
        if self.oracle.levels == 0 {
            return Err(CliError::config("oracle.levels must be at least 1"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.residual", t.residual),
            ("tolerances.value_match", t.value_match),
            ("tolerances.dpp", t.dpp),
            ("tolerances.growth_rate", t.growth_rate),
            ("tolerances.oracle", t.oracle),
        ] {
            positive(name, v)?;
        }
        match &self.model {
            ModelConfig::SpatialGrowth(c) => positive("model.rho", c.rho),
            ModelConfig::Pollution(c) => positive("model.rho", c.rho),
            ModelConfig::VintageDde(c) => {
                positive("model.rho", c.rho)?;
                positive("model.productivity", c.productivity)?;
                positive("model.scrapping_time", c.scrapping_time)
            }
            ModelConfig::VintageTransport(c) => {
                positive("model.rho", c.rho)?;
                if let Some(s) = c.max_age {
                    positive("model.max_age", s)?;
                }
                Ok(())
            }
            ModelConfig::TimeToBuild(c) => {
                positive("model.rho", c.rho)?;
                positive("model.lag", c.lag)?;
                positive("model.output", c.output)
            }
        }
    }

    /// Double every resolution `k` times and halve the time step.
    pub fn refined(&self, k: u32) -> Self {
        let f = 1usize << k;
        let mut out = self.clone();
        out.numerics.n *= f;
        out.numerics.m *= f;
        out.numerics.age_cells *= f;
        out.numerics.dt /= f as f64;
        out
    }

    /// Default scenario of each model.
    pub fn default_for(model: &str) -> Option<Self> {
        let model = match model {
            "spatial-growth" => ModelConfig::SpatialGrowth(SpatialConfig {
                productivity: Profile::Cosine { mean: 0.04, amplitude: 0.01, harmonic: 1 },
                population: Profile::Sine { mean: 1.0, amplitude: 0.2, harmonic: 1 },
                sigma: 0.5,
                rho: 0.03,
                initial: Profile::Cosine { mean: 1.0, amplitude: 0.3, harmonic: 1 },
            }),
            "pollution" => ModelConfig::Pollution(PollutionConfig {
                diffusion: Profile::Sine { mean: 0.2, amplitude: 0.05, harmonic: 1 },
                decay: Profile::Cosine { mean: 0.1, amplitude: 0.05, harmonic: 1 },
                emission: Profile::Sine { mean: 1.0, amplitude: 0.3, harmonic: 1 },
                productivity: Profile::Cosine { mean: 2.5, amplitude: 0.5, harmonic: 1 },
                gamma: Profile::Cosine { mean: 0.5, amplitude: 0.1, harmonic: 1 },
                disutility: Profile::Sine { mean: 1.0, amplitude: 0.5, harmonic: 1 },
                rho: 0.05,
                initial: Profile::Cosine { mean: 1.0, amplitude: 0.5, harmonic: 1 },
            }),
            "vintage-dde" => ModelConfig::VintageDde(VintageConfig {
                productivity: 1.0,
                scrapping_time: 2.0,
                sigma: 0.5,
                rho: 0.45,
                investment_history: HistoryProfile::Constant { value: 1.0 },
                capital: None,
            }),
            "vintage-transport" => ModelConfig::VintageTransport(TransportConfig {
                mu: 0.1,
                rho: 0.05,
                max_age: Some(10.0),
                revenue: AgeProfile::Falling { coefficients: vec![0.0, 1.0] },
                price: AgeProfile::Falling { coefficients: vec![0.0, 0.0, 0.5] },
                adjustment: AgeProfile::Falling { coefficients: vec![1.0, 0.5] },
                boundary_price: 1.0,
                boundary_adjustment: 2.0,
                initial: AgeProfile::Constant { value: 1.0 },
            }),
            "time-to-build" => ModelConfig::TimeToBuild(TimeToBuildConfig {
                productivity: 0.35,
                depreciation: 0.05,
                lag: 1.0,
                sigma: 2.0,
                rho: 0.1,
                output: 1.0,
                control_history: HistoryProfile::Constant { value: 0.2 },
            }),
            _ => return None,
        };
        Some(Self { model, numerics: Numerics::default(), tolerances: Tolerances::default(), oracle: OracleConfig::default() })
    }

    pub const MODELS: [&'static str; 5] = ["spatial-growth", "pollution", "vintage-dde", "vintage-transport", "time-to-build"];
}
