//! Seeded Monte Carlo oracle.
//!
//! Trial `i` draws only from `substream(seed, i)` and trial outcomes are
//! reduced in fixed-size chunks combined in index order, so a report is a
//! pure function of its inputs and does not depend on the worker count.
//! Void trials (no drone in A) count as zero in every estimate.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::mean_aggregate_interference;
use crate::channel::{fspl_unchecked, EnvironmentParams};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{sample_annulus, sample_closest_angle, SystemConfig};
use crate::quadrature::QuadratureSpec;
use crate::rng::{substream, Stream};

pub const MIN_INTERFERENCE_TRIALS: u64 = 100;
pub const MIN_COVERAGE_TRIALS: u64 = 1000;

/// How the serving link's interference is obtained in a coverage trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    /// Conditional mean interference given the serving angle.
    #[default]
    MeanField,
    /// Realized interferer field with sampled channels.
    FullStochastic,
}

impl SimulationMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimulationMode::MeanField => "mean_field",
            SimulationMode::FullStochastic => "full_stochastic",
        }
    }
}

impl fmt::Display for SimulationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimulationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_field" | "mean-field" => Ok(SimulationMode::MeanField),
            "full_stochastic" | "full-stochastic" => Ok(SimulationMode::FullStochastic),
            other => Err(Error::invalid(
                "mode",
                format!("expected mean_field or full_stochastic, got `{other}`"),
            )),
        }
    }
}

/// Estimate of one quantity with its standard error.
///
/// `mode` is set for coverage runs only. Standard errors of interference
/// estimates come from the sample variance; log-normal sums are heavy
/// tailed, so they are optimistic at small trial counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
    pub mode: Option<SimulationMode>,
}

/// Trial count, master seed and scheduling for a batch of simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulator {
    pub trials: u64,
    pub seed: u64,
    pub execution: Execution,
    /// Used by mean-field trials to evaluate the conditional interference.
    pub quad: QuadratureSpec,
}

impl Simulator {
    pub fn new(trials: u64, seed: u64) -> Self {
        Simulator {
            trials,
            seed,
            execution: Execution::default(),
            quad: QuadratureSpec::default(),
        }
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        Simulator { execution, ..self }
    }

    fn require_trials(&self, floor: u64) -> Result<()> {
        if self.trials < floor {
            return Err(Error::invalid(
                "trials",
                format!("need at least {floor}, got {}", self.trials),
            ));
        }
        Ok(())
    }

    /// Aggregate interference at the user with the serving drone fixed at
    /// `phi_c`, averaged over field and channel realizations.
    pub fn mean_interference(
        &self,
        cfg: &SystemConfig,
        env: &EnvironmentParams,
        phi_c: f64,
    ) -> Result<MonteCarloReport> {
        cfg.validate()?;
        self.require_trials(MIN_INTERFERENCE_TRIALS)?;
        let edge = cfg.half_beam();
        if !(phi_c >= 0.0 && phi_c <= edge) {
            return Err(Error::angle("phi_c", phi_c, format!("[0, {edge}]")));
        }
        let m = self.execution.moments(self.trials, |i| {
            let mut rng = substream(self.seed, i);
            Ok(realized_interference(cfg, env, phi_c, &mut rng))
        })?;
        Ok(self.report(m.mean(), m.std_error(), None))
    }

    /// Fraction of trials whose serving SINR exceeds the threshold.
    pub fn coverage(
        &self,
        cfg: &SystemConfig,
        env: &EnvironmentParams,
        mode: SimulationMode,
    ) -> Result<MonteCarloReport> {
        cfg.validate()?;
        self.require_trials(MIN_COVERAGE_TRIALS)?;
        let (pt, n0, t) = (cfg.pt_linear(), cfg.n0_linear(), cfg.t_linear());
        let m = self.execution.moments(self.trials, |i| {
            let mut rng = substream(self.seed, i);
            let Some(phi_c) = sample_closest_angle(cfg, &mut rng) else {
                return Ok(0.0);
            };
            let link = env.sample_unchecked(phi_c, &mut rng);
            let signal = pt / (fspl_unchecked(phi_c, cfg.h, cfg.f) * link.psi_linear);
            let interference = match mode {
                SimulationMode::MeanField => {
                    mean_aggregate_interference(phi_c, cfg, env, &self.quad)?
                }
                SimulationMode::FullStochastic => realized_interference(cfg, env, phi_c, &mut rng),
            };
            Ok(if signal / (interference + n0) > t {
                1.0
            } else {
                0.0
            })
        })?;
        Ok(self.report(m.mean(), binomial_se(m.mean(), self.trials), Some(mode)))
    }

    /// Fraction of trials whose closest drone is in LoS.
    pub fn avg_los_closest(
        &self,
        cfg: &SystemConfig,
        env: &EnvironmentParams,
    ) -> Result<MonteCarloReport> {
        cfg.validate()?;
        self.require_trials(MIN_COVERAGE_TRIALS)?;
        let m = self.execution.moments(self.trials, |i| {
            let mut rng = substream(self.seed, i);
            Ok(match sample_closest_angle(cfg, &mut rng) {
                Some(phi_c) if rng.gen::<f64>() < env.p_los_unchecked(phi_c) => 1.0,
                _ => 0.0,
            })
        })?;
        Ok(self.report(m.mean(), binomial_se(m.mean(), self.trials), None))
    }

    fn report(
        &self,
        estimate: f64,
        std_error: f64,
        mode: Option<SimulationMode>,
    ) -> MonteCarloReport {
        MonteCarloReport {
            estimate,
            std_error,
            trials: self.trials,
            seed: self.seed,
            mode,
        }
    }
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

/// Interference summed over one realization of the interferers outside
/// `phi_c`.
pub(crate) fn realized_interference(
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    phi_c: f64,
    rng: &mut Stream,
) -> f64 {
    let pt = cfg.pt_linear();
    sample_annulus(cfg, phi_c, rng)
        .into_iter()
        .map(|phi| {
            let link = env.sample_unchecked(phi, rng);
            pt / (fspl_unchecked(phi, cfg.h, cfg.f) * link.psi_linear)
        })
        .sum()
}

pub fn simulate_mean_interference(
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    phi_c: f64,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloReport> {
    Simulator::new(trials, seed).mean_interference(cfg, env, phi_c)
}

pub fn simulate_coverage(
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    trials: u64,
    seed: u64,
    mode: SimulationMode,
) -> Result<MonteCarloReport> {
    Simulator::new(trials, seed).coverage(cfg, env, mode)
}

pub fn simulate_avg_los_closest(
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloReport> {
    Simulator::new(trials, seed).avg_los_closest(cfg, env)
}
