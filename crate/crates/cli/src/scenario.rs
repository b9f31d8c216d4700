//! Scenario files: JSON documents with rates in units of `g`.
//!
//! ```json
//! { "placement": "loss", "J": 1.9, "r": 0.7, "alpha": [0.4243, 0.4243] }
//! ```
//!
//! Missing keys take defaults (`g = gamma = 1`, `theta = π/4`, noise on,
//! vacuum inputs, 2000 steps over `g·t ∈ [0, 8]`). An explicit `g` switches
//! to raw rates, which are divided by `g` before use; `gamma` then
//! defaults to `g`.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use cvpt_core::{CoherentInput, Complex64, McScheme, McSettings, Placement, SystemConfig, TimeGrid};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Free text, ignored.
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default = "default_placement")]
    pub placement: Placement,
    #[serde(default)]
    pub g: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(rename = "J")]
    pub coupling: f64,
    #[serde(default)]
    pub r: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_true")]
    pub noise: bool,
    #[serde(default)]
    pub alpha: [f64; 2],
    #[serde(default)]
    pub beta: [f64; 2],
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub mc: Option<McSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n_traj: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mc_times")]
    pub times: Vec<f64>,
    #[serde(default)]
    pub scheme: SchemeName,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    #[default]
    LinearTaylor,
    EulerMaruyama,
}

fn default_placement() -> Placement {
    Placement::None
}
fn default_theta() -> f64 {
    FRAC_PI_4
}
fn default_true() -> bool {
    true
}
fn default_t_max() -> f64 {
    8.0
}
fn default_steps() -> usize {
    2000
}
fn default_dt() -> f64 {
    1e-3
}
fn default_mc_times() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

/// Scenario key for a core parameter name, for error messages.
fn key_for(name: &str) -> &str {
    match name {
        "gain" => "g",
        "loss" => "gamma",
        "coupling" => "J",
        "squeeze_r" => "r",
        "squeeze_theta" => "theta",
        other => other,
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                inner.to_string()
            } else {
                format!("key `{path}`: {inner}")
            }
        })?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text).map_err(|msg| CliError::Config(format!("{}: {msg}", path.display())))
    }

    /// Rates normalized to `g = 1`.
    pub fn config(&self) -> Result<SystemConfig, CliError> {
        let (gain, loss) = match self.g {
            Some(g) => (g, self.gamma.unwrap_or(g)),
            None => (1.0, self.gamma.unwrap_or(1.0)),
        };
        let raw = SystemConfig {
            gain,
            loss,
            coupling: self.coupling,
            squeeze_r: self.r,
            squeeze_theta: self.theta,
            placement: self.placement,
            noise: self.noise,
        };
        raw.validate().and_then(|_| raw.normalized()).map_err(|e| match e {
            cvpt_core::Error::InvalidParameter { name, value, reason } => {
                CliError::Config(format!("key `{}` = {value}: {reason}", key_for(name)))
            }
            other => CliError::Config(other.to_string()),
        })
    }

    pub fn input(&self) -> Result<CoherentInput, CliError> {
        if self.alpha.iter().chain(&self.beta).any(|x| !x.is_finite()) {
            return Err(CliError::Config("keys `alpha`/`beta` must be finite".into()));
        }
        Ok(CoherentInput::new(Complex64::new(self.alpha[0], self.alpha[1]), Complex64::new(self.beta[0], self.beta[1])))
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        TimeGrid::new(self.t_max, self.steps).map_err(|_| {
            CliError::Config(format!(
                "keys `t_max`/`steps`: need t_max > 0 and steps >= 1, got {} and {}",
                self.t_max, self.steps
            ))
        })
    }

    pub fn mc_settings(&self, seed: Option<u64>) -> Option<(McSettings, Vec<f64>)> {
        self.mc.as_ref().map(|mc| {
            let scheme = match mc.scheme {
                SchemeName::LinearTaylor => McScheme::LinearTaylor,
                SchemeName::EulerMaruyama => McScheme::EulerMaruyama,
            };
            let settings = McSettings { scheme, ..McSettings::new(mc.n_traj, mc.dt, seed.unwrap_or(mc.seed)) };
            (settings, mc.times.clone())
        })
    }
}
