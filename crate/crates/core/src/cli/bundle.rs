//! The fitted-model file shared by the subcommands.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tcrisk::evt::{
    BodyMode, GpdFit, MomentCheck, NoiseModel, SplicedNoise, StandardNormalNoise, TailModel,
};
use tcrisk::garch::{GarchParams, InitRule};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    #[default]
    Spliced,
    Normal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GarchSummary {
    pub stderrs: Option<[f64; 3]>,
    pub loglik: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBundle {
    pub version: String,
    pub garch: GarchParams,
    #[serde(default)]
    pub init_rule: InitRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub garch_fit: Option<GarchSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gpd_fit: Option<GpdFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_check: Option<MomentCheck>,
    /// `σ_{t+1}` at the end of the sample.
    pub sigma_next: f64,
    /// Standardized residuals used for the body of the spliced noise law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<f64>>,
}

impl ModelBundle {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        let bundle: ModelBundle = serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("invalid model file {}: {e}", path.display())))?;
        if !(bundle.sigma_next > 0.0 && bundle.sigma_next.is_finite()) {
            return Err(CliError::data("model file: sigma_next must be positive"));
        }
        Ok(bundle)
    }

    pub fn noise(&self, kind: NoiseKind) -> Result<Box<dyn NoiseModel>, CliError> {
        match kind {
            NoiseKind::Normal => Ok(Box::new(StandardNormalNoise)),
            NoiseKind::Spliced => {
                let tail = self
                    .tail
                    .ok_or_else(|| CliError::data("model has no tail; use --noise normal"))?;
                let noise = match &self.residuals {
                    Some(z) => SplicedNoise::new(z, tail, BodyMode::Symmetrized),
                    None => SplicedNoise::from_tail(tail),
                }
                .map_err(CliError::from)?;
                Ok(Box::new(noise))
            }
        }
    }
}
