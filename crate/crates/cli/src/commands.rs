//! Executes a manifest. Everything a command computes is a pure function
//! of its manifest, so replaying a record reproduces its results.

use serde::Serialize;

use dronecov_core::analysis::coverage_probability_with;
use dronecov_core::optimize::{optimize, sweep, Optimum};
use dronecov_core::{
    avg_los_closest, linear_to_db, mean_aggregate_interference, Execution, MonteCarloReport,
    SimulationMode, Simulator, SweepParameter, SweepResult, SweepSpec, SystemConfig,
};

use crate::error::{CliError, CliResult};
use crate::manifest::{Command, RunManifest};

pub const MIN_VALIDATE_TRIALS: u64 = 100_000;

/// Serving angles probed by the interference check.
pub const VALIDATE_ANGLES: [f64; 4] = [0.0, 0.1, 0.3, 0.6];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComputeResult {
    pub p_cov: f64,
    pub p_los_closest: f64,
    /// Watts.
    pub mu_iagg_at_zero: f64,
    pub mu_iagg_at_zero_dbw: f64,
    pub void_ceiling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub deviation: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: String, expected: f64, observed: f64, deviation: f64, bound: f64) -> Self {
        Check {
            name,
            expected,
            observed,
            deviation,
            bound,
            passed: deviation <= bound,
        }
    }

    /// Simulation agrees within three standard errors plus the quadrature
    /// tolerance.
    fn oracle(name: String, expected: f64, mc: &MonteCarloReport, m: &RunManifest) -> Self {
        let bound = 3.0 * mc.std_error + m.quad.rel_tol * expected.abs() + m.quad.abs_tol;
        Check::new(
            name,
            expected,
            mc.estimate,
            (mc.estimate - expected).abs(),
            bound,
        )
    }

    fn relative(name: String, expected: f64, observed: f64, bound: f64) -> Self {
        let deviation = if observed == expected {
            0.0
        } else {
            (observed / expected - 1.0).abs()
        };
        Check::new(name, expected, observed, deviation, bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Results {
    Compute(ComputeResult),
    Simulate(MonteCarloReport),
    Sweep(SweepResult),
    Optimize(Optimum),
    Validate(ValidationReport),
}

fn required<T: Copy>(v: Option<T>, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::input(format!("manifest is missing `{what}`")))
}

pub fn execute(m: &RunManifest, execution: Execution) -> CliResult<Results> {
    m.cfg.validate()?;
    m.quad.validate()?;
    m.environment.validate()?;
    Ok(match m.command {
        Command::Compute => Results::Compute(compute(m)?),
        Command::Simulate => {
            let mode = m.mode.unwrap_or(SimulationMode::MeanField);
            Results::Simulate(simulator(m, execution)?.coverage(&m.cfg, &m.environment, mode)?)
        }
        Command::Sweep => Results::Sweep(sweep(&sweep_spec(m)?, execution)?),
        Command::Optimize => Results::Optimize(optimize(&sweep_spec(m)?, execution)?),
        Command::Validate => Results::Validate(validate(m, execution)?),
    })
}

fn simulator(m: &RunManifest, execution: Execution) -> CliResult<Simulator> {
    Ok(Simulator {
        quad: m.quad,
        ..Simulator::new(required(m.trials, "trials")?, m.seed.unwrap_or(0))
            .with_execution(execution)
    })
}

fn sweep_spec(m: &RunManifest) -> CliResult<SweepSpec> {
    let parameter: SweepParameter = required(m.parameter, "parameter")?;
    Ok(SweepSpec {
        parameter,
        grid: m.grid.clone().unwrap_or_else(|| parameter.default_grid()),
        base_cfg: m.cfg,
        env: m.environment.clone(),
        quad: m.quad,
        strategy: m.nested,
    })
}

fn compute(m: &RunManifest) -> CliResult<ComputeResult> {
    let mu0 = mean_aggregate_interference(0.0, &m.cfg, &m.environment, &m.quad)?;
    Ok(ComputeResult {
        p_cov: coverage_probability_with(&m.cfg, &m.environment, &m.quad, m.nested)?,
        p_los_closest: avg_los_closest(&m.cfg, &m.environment, &m.quad)?,
        mu_iagg_at_zero: mu0,
        mu_iagg_at_zero_dbw: linear_to_db(mu0),
        void_ceiling: m.cfg.coverage_ceiling(),
    })
}

fn validate(m: &RunManifest, execution: Execution) -> CliResult<ValidationReport> {
    let sim = simulator(m, execution)?;
    if sim.trials < MIN_VALIDATE_TRIALS {
        return Err(CliError::input(format!(
            "invalid `trials`: validation needs at least {MIN_VALIDATE_TRIALS}, got {}",
            sim.trials
        )));
    }
    let (cfg, env, quad) = (&m.cfg, &m.environment, &m.quad);
    let mu = |phi_c: f64, cfg: &SystemConfig| mean_aggregate_interference(phi_c, cfg, env, quad);
    let mut checks = Vec::new();

    for phi_c in VALIDATE_ANGLES.into_iter().filter(|&p| p < cfg.half_beam()) {
        let mc = sim.mean_interference(cfg, env, phi_c)?;
        checks.push(Check::oracle(
            format!("interference phi_c={phi_c}"),
            mu(phi_c, cfg)?,
            &mc,
            m,
        ));
    }
    let analytic = coverage_probability_with(cfg, env, quad, m.nested)?;
    let mc = sim.coverage(cfg, env, SimulationMode::MeanField)?;
    checks.push(Check::oracle("coverage".into(), analytic, &mc, m));
    let mc = sim.avg_los_closest(cfg, env)?;
    checks.push(Check::oracle(
        "avg los closest".into(),
        avg_los_closest(cfg, env, quad)?,
        &mc,
        m,
    ));

    let phi_c = 0.1f64.min(0.5 * cfg.half_beam());
    let base = mu(phi_c, cfg)?;
    let taller = SystemConfig {
        h: 10.0 * cfg.h,
        ..*cfg
    };
    checks.push(Check::relative(
        "altitude invariance".into(),
        base,
        mu(phi_c, &taller)?,
        1e-6,
    ));
    if cfg.lambda > 0.0 {
        let denser = SystemConfig {
            lambda: 2.0 * cfg.lambda,
            ..*cfg
        };
        checks.push(Check::relative(
            "linearity in density".into(),
            2.0 * base,
            mu(phi_c, &denser)?,
            1e-12,
        ));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport { checks, passed })
}
