//! Experiment configuration: a JSON object with the mechanism spec and the
//! simulation knobs. Unknown keys are rejected by name; invariant
//! violations name the offending field.

use serde::{Deserialize, Serialize};

use crtfrag_core::mechanism::BranchingMechanism;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mechanism: BranchingMechanism,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// level grid spacing; None means adaptive (max H / 256 per excursion)
    #[serde(default)]
    pub da: Option<f64>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// jump truncation level; None picks the mechanism default
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    #[serde(default = "default_theta_grid")]
    pub theta_grid: Vec<f64>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// replicate count for Monte Carlo suites
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default)]
    pub seed: u64,
    /// output directory
    #[serde(default = "default_out")]
    pub out: String,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_horizon() -> f64 {
    100.0
}

fn default_theta_max() -> f64 {
    1.0
}

fn default_theta_grid() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8, 1.0]
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0, 2.0]
}

fn default_n() -> u64 {
    10_000
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        raw.validate()?;
        Ok(raw)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        // the mechanism deserializes structurally; re-run its invariants
        BranchingMechanism::new(
            self.mechanism.alpha(),
            self.mechanism.beta(),
            self.mechanism.levy().clone(),
        )
        .map_err(|e| ConfigError(format!("mechanism: {e}")))?;
        let positive = [
            ("dt", self.dt),
            ("horizon", self.horizon),
            ("theta_max", self.theta_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError(format!("field {name}: must be positive")));
            }
        }
        if let Some(da) = self.da {
            if !(da > 0.0) {
                return Err(ConfigError("field da: must be positive".into()));
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0) {
                return Err(ConfigError("field epsilon: must be nonnegative".into()));
            }
        }
        for &t in &self.theta_grid {
            if !(t >= 0.0 && t <= self.theta_max) {
                return Err(ConfigError(
                    "field theta_grid: entries must lie in [0, theta_max]".into(),
                ));
            }
        }
        for &l in &self.lambdas {
            if !(l > 0.0) {
                return Err(ConfigError("field lambdas: entries must be positive".into()));
            }
        }
        if self.n == 0 {
            return Err(ConfigError("field n: must be positive".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
