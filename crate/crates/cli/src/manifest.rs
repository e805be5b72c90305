use serde::{Deserialize, Serialize};

use dronecov_core::{
    EnvironmentParams, NestedStrategy, QuadratureSpec, SimulationMode, SweepParameter, SystemConfig,
};

/// Everything needed to reproduce a run's results, bar the timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub tool_version: String,
    /// ISO-8601 UTC.
    pub timestamp: String,
    pub env: String,
    pub environment: EnvironmentParams,
    /// Internal units: radians for `phi_a`.
    pub cfg: SystemConfig,
    pub quad: QuadratureSpec,
    pub nested: NestedStrategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<SimulationMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<SweepParameter>,
    /// Sweep grid, internal units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Compute,
    Simulate,
    Sweep,
    Optimize,
    Validate,
}

impl RunManifest {
    pub fn new(
        command: Command,
        env: EnvironmentParams,
        cfg: SystemConfig,
        quad: QuadratureSpec,
        nested: NestedStrategy,
    ) -> Self {
        RunManifest {
            command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: now(),
            env: env.name.clone(),
            environment: env,
            cfg,
            quad,
            nested,
            seed: None,
            trials: None,
            mode: None,
            parameter: None,
            grid: None,
        }
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// JSON output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record<T> {
    pub manifest: RunManifest,
    pub results: T,
}
