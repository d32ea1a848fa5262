use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::diffusion::{PredictorKind, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenoiserKind {
    #[default]
    Analytic,
    External,
}

impl FromStr for DenoiserKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "external" => Ok(Self::External),
            other => Err(format!(
                "unknown denoiser '{other}' (expected analytic or external)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecomposerKind {
    Oracle,
    #[default]
    Passthrough,
    External,
}

impl FromStr for DecomposerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "passthrough" => Ok(Self::Passthrough),
            "external" => Ok(Self::External),
            other => Err(format!(
                "unknown decomposer '{other}' (expected oracle, passthrough or external)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiserConfig {
    pub kind: DenoiserKind,
    /// Prior of the analytic denoiser.
    pub mu: f64,
    pub sigma: f64,
    pub program: Option<String>,
    pub args: Vec<String>,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            kind: DenoiserKind::Analytic,
            mu: 0.5,
            sigma: 0.25,
            program: None,
            args: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecomposerConfig {
    pub kind: DecomposerKind,
    pub program: Option<String>,
    pub args: Vec<String>,
}

/// Every tunable of every command. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub qf: u8,
    /// The only source of randomness; copied into the sampler.
    pub seed: u64,
    /// Scattering coefficient applied to depth maps by `degrade`.
    pub beta: f64,
    pub airlight: [f64; 3],
    /// Uniform transmission for `degrade`, overriding any depth.
    pub transmission: Option<f64>,
    pub t_list: Vec<f64>,
    pub snapshot_every: Option<usize>,
    pub sampler: SamplerConfig,
    pub denoiser: DenoiserConfig,
    pub decomposer: DecomposerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            qf: 80,
            seed: 0,
            beta: 1.0,
            airlight: [0.9; 3],
            transmission: None,
            t_list: vec![1.0, 0.5],
            snapshot_every: None,
            sampler: SamplerConfig::default(),
            denoiser: DenoiserConfig::default(),
            decomposer: DecomposerConfig::default(),
        }
    }
}

/// Values given on the command line. `None` leaves the config untouched.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub qf: Option<u8>,
    pub seed: Option<u64>,
    pub patch: Option<usize>,
    pub stride: Option<usize>,
    pub denoiser: Option<DenoiserKind>,
    pub decomposer: Option<DecomposerKind>,
    pub predictor: Option<PredictorKind>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.qf {
            self.qf = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.patch {
            self.sampler.patch = v;
        }
        if let Some(v) = o.stride {
            self.sampler.stride = v;
        }
        if let Some(v) = o.denoiser {
            self.denoiser.kind = v;
        }
        if let Some(v) = o.decomposer {
            self.decomposer.kind = v;
        }
        if let Some(v) = o.predictor {
            self.sampler.predictor = v;
        }
        self.sampler.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(1..=100).contains(&self.qf) {
            return Err(CliError::Usage(format!(
                "qf must lie in 1..=100, got {}",
                self.qf
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(CliError::Usage(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if let Some(t) = self.transmission {
            if !(t > 0.0 && t <= 1.0) {
                return Err(CliError::Usage(format!("transmission {t} outside (0, 1]")));
            }
        }
        if self.t_list.is_empty() || self.t_list.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(CliError::Usage(format!(
                "t_list {:?} must be non-empty with values in (0, 1]",
                self.t_list
            )));
        }
        if self.snapshot_every == Some(0) {
            return Err(CliError::Usage("snapshot_every must be positive".into()));
        }
        crate::haze::Airlight(self.airlight).validate()?;
        self.sampler.validate()?;
        Ok(())
    }
}
