//! Scenario files and their command-line overrides.

use std::path::Path;

use emsq::sim::{AssignmentPolicy, SimConfig};
use emsq::{SystemParams, Workload};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_T_LOS: f64 = 30.0;

/// One fleet size or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Servers {
    One(u32),
    Many(Vec<u32>),
}

impl Servers {
    pub fn to_vec(&self) -> Vec<u32> {
        match self {
            Servers::One(m) => vec![*m],
            Servers::Many(ms) => ms.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub t_call_grid: Vec<f64>,
}

/// Simulation settings; anything left out gets the library default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub seed: Option<u64>,
    pub replications: Option<u32>,
    pub warmup: Option<f64>,
    pub horizon: Option<f64>,
    pub start_state: Option<u64>,
    pub batches: Option<u32>,
    pub policy: Option<AssignmentPolicy>,
}

/// The flat JSON scenario document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub t_call_min: Option<f64>,
    pub t_service_min: Option<f64>,
    pub servers: Option<Servers>,
    pub t_los_min: Option<f64>,
    pub cost_per_attention: Option<f64>,
    pub sweep: Option<SweepSettings>,
    pub sim: Option<SimSettings>,
}

/// A scenario after overrides and validation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub workload: Workload,
    pub servers: Vec<u32>,
    pub t_los: f64,
    pub cost_per_attention: f64,
    pub t_call_grid: Option<Vec<f64>>,
    pub sim: SimSettings,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Validates required fields. `needs_servers` is false for sizing, which
    /// searches over the fleet size.
    pub fn resolve(&self, needs_servers: bool) -> Result<Scenario, CliError> {
        let t_call = self
            .t_call_min
            .ok_or_else(|| CliError::config("t_call_min is required (--t-call)"))?;
        let t_service = self
            .t_service_min
            .ok_or_else(|| CliError::config("t_service_min is required (--t-service)"))?;
        let workload = Workload::new(t_call, t_service)?;
        let servers = self
            .servers
            .as_ref()
            .map(Servers::to_vec)
            .unwrap_or_default();
        if needs_servers && servers.is_empty() {
            return Err(CliError::config(
                "servers must list at least one fleet size (--servers)",
            ));
        }
        for &m in &servers {
            workload.with_servers(m)?;
        }
        let t_los = self.t_los_min.unwrap_or(DEFAULT_T_LOS);
        if !(t_los >= 0.0 && t_los.is_finite()) {
            return Err(CliError::config(format!(
                "t_los_min must be non-negative, got {t_los}"
            )));
        }
        let cost_per_attention = self.cost_per_attention.unwrap_or(0.0);
        if !(cost_per_attention >= 0.0 && cost_per_attention.is_finite()) {
            return Err(CliError::config(format!(
                "cost_per_attention must be non-negative, got {cost_per_attention}"
            )));
        }
        let t_call_grid = match &self.sweep {
            Some(sweep) if sweep.t_call_grid.is_empty() => {
                return Err(CliError::config("sweep.t_call_grid must not be empty"));
            }
            Some(sweep) => {
                for &t in &sweep.t_call_grid {
                    Workload::new(t, t_service)?;
                }
                Some(sweep.t_call_grid.clone())
            }
            None => None,
        };
        Ok(Scenario {
            workload,
            servers,
            t_los,
            cost_per_attention,
            t_call_grid,
            sim: self.sim.clone().unwrap_or_default(),
        })
    }
}

impl Scenario {
    pub fn params(&self, servers: u32) -> Result<SystemParams, CliError> {
        Ok(self.workload.with_servers(servers)?)
    }

    /// Library defaults for `params`, overridden by the scenario's settings.
    pub fn sim_config(&self, params: &SystemParams, seed: u64) -> SimConfig {
        let mut config = SimConfig::for_params(params, seed);
        let s = &self.sim;
        if let Some(v) = s.replications {
            config.replications = v;
        }
        if let Some(v) = s.warmup {
            config.warmup = v;
            if s.horizon.is_none() {
                config.horizon = v + 2e4 * params.t_call();
            }
        }
        if let Some(v) = s.horizon {
            config.horizon = v;
        }
        if let Some(v) = s.start_state {
            config.start_state = v;
        }
        if let Some(v) = s.batches {
            config.batches = v;
        }
        if let Some(v) = s.policy {
            config.policy = v;
        }
        config
    }
}
