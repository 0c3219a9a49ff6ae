use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::jscc::{JsccProblem, Units};
use crate::prob::Channel;
use crate::sim::UepMode;
use crate::source::SourceSpec;

/// Problem description read by every subcommand except `separation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Distortion level for the `source` subcommand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Units>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelBlock {
    pub matrix: Channel,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u64>>,
    /// Operating distortion overriding the computed threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uep: Option<UepBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dball: Option<DballBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UepBlock {
    /// Input type counts per class; all share one block length.
    pub types: Vec<Vec<u64>>,
    /// Target error probability per class.
    pub eps: Vec<f64>,
    /// Decoder threshold in nats; calibrated from `target_e2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_target_e2")]
    pub target_e2: f64,
    #[serde(default)]
    pub mode: UepMode,
}

fn default_target_e2() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DballBlock {
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_d_grid")]
    pub d_grid: Vec<f64>,
}

fn default_n_max() -> u64 {
    12
}

fn default_d_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

impl Default for DballBlock {
    fn default() -> Self {
        Self {
            n_max: default_n_max(),
            d_grid: default_d_grid(),
        }
    }
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let at = if path == "." { "problem file".to_string() } else { format!("field `{path}`") };
            CliError::parse(format!("{at}: {inner}"))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn source(&self) -> Result<&SourceSpec, CliError> {
        self.source.as_ref().ok_or_else(|| CliError::parse("problem file: missing field `source`"))
    }

    pub fn channel(&self) -> Result<&Channel, CliError> {
        self.channel
            .as_ref()
            .map(|c| &c.matrix)
            .ok_or_else(|| CliError::parse("problem file: missing field `channel`"))
    }

    pub fn eps(&self) -> Result<f64, CliError> {
        let eps = self.eps.ok_or_else(|| CliError::parse("problem file: missing field `eps`"))?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CliError::parse(format!("field `eps`: must lie in (0, 1), got {eps}")));
        }
        Ok(eps)
    }

    pub fn rho(&self) -> Result<f64, CliError> {
        let rho = self.rho.ok_or_else(|| CliError::parse("problem file: missing field `rho`"))?;
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(CliError::parse(format!("field `rho`: must be positive, got {rho}")));
        }
        Ok(rho)
    }

    pub fn problem(&self) -> Result<JsccProblem, CliError> {
        JsccProblem::new(self.source()?.clone(), self.channel()?.clone(), self.rho()?, self.eps()?)
            .map_err(|e| CliError::parse(e.to_string()))
    }

    pub fn sim(&self) -> SimBlock {
        self.sim.clone().unwrap_or_default()
    }
}
