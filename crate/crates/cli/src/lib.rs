//! `dronecov` command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use dronecov_core::{Execution, SimulationMode, SweepParameter};

use crate::commands::{execute, Results, MIN_VALIDATE_TRIALS};
use crate::config::{EnvSource, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{now, Command, Record, RunManifest};
use crate::output::{parse_grid, render_csv, to_display, write_atomic};

#[derive(Debug, Parser)]
#[command(
    name = "dronecov",
    version,
    about = "Coverage of a ground user served by a Poisson field of drones"
)]
pub struct Cli {
    /// Config file of `key = value` lines.
    #[arg(short, long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Environment name, or path to an environment parameter file.
    #[arg(long, global = true, value_name = "NAME|PATH")]
    pub env: Option<String>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Nested adaptive quadrature instead of the interference profile.
    #[arg(long, global = true)]
    pub exact_nested: bool,
    /// Print a JSON record `{manifest, results}` instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Run on the calling thread only.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Coverage, average LoS probability and mean interference.
    Compute,
    /// Monte Carlo estimate of the coverage probability.
    Simulate {
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// mean_field or full_stochastic.
        #[arg(long, default_value = "mean_field")]
        mode: SimulationMode,
    },
    /// Evaluate a parameter grid and write CSV.
    Sweep {
        /// altitude, density or beamwidth.
        #[arg(long)]
        param: SweepParameter,
        /// `lo:hi:n`, a comma list, or a file of values. Beamwidth in degrees.
        #[arg(long)]
        grid: Option<String>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep, then refine the best interior point.
    Optimize {
        #[arg(long)]
        param: SweepParameter,
        #[arg(long)]
        grid: Option<String>,
        /// Also write the sweep CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare every closed form with simulation.
    Validate {
        #[arg(long, default_value_t = MIN_VALIDATE_TRIALS)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-run the manifest of a JSON record; exit 1 if the results differ.
    Replay { record: PathBuf },
}

impl Cli {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn manifest(&self, command: Command) -> CliResult<RunManifest> {
        let mut run = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let (source, name) = EnvSource::from_flag(self.env.as_deref());
        if let Some(name) = name {
            run.env_name = name;
        }
        for o in &self.overrides {
            run.apply_override(o)?;
        }
        let env = source.resolve(&run.env_name)?;
        run.validate()?;
        Ok(RunManifest::new(
            command,
            env,
            run.cfg,
            run.quad,
            run.strategy(self.exact_nested),
        ))
    }
}

/// Runs the parsed command, writing reports to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let exec = cli.execution();
    let (manifest, csv_out) = match &cli.command {
        Sub::Replay { record } => return replay(record, exec, out),
        Sub::Compute => (cli.manifest(Command::Compute)?, None),
        Sub::Simulate { trials, seed, mode } => {
            let mut m = cli.manifest(Command::Simulate)?;
            m.trials = Some(*trials);
            m.seed = Some(*seed);
            m.mode = Some(*mode);
            (m, None)
        }
        Sub::Validate { trials, seed } => {
            let mut m = cli.manifest(Command::Validate)?;
            m.trials = Some(*trials);
            m.seed = Some(*seed);
            (m, None)
        }
        Sub::Sweep {
            param,
            grid,
            out: path,
        }
        | Sub::Optimize {
            param,
            grid,
            out: path,
        } => {
            let command = if matches!(cli.command, Sub::Sweep { .. }) {
                Command::Sweep
            } else {
                Command::Optimize
            };
            let mut m = cli.manifest(command)?;
            m.parameter = Some(*param);
            m.grid = Some(match grid {
                Some(spec) => parse_grid(*param, spec)?,
                None => param.default_grid(),
            });
            (m, path.clone())
        }
    };

    let results = execute(&manifest, exec)?;
    let sweep_rows = match &results {
        Results::Sweep(s) => Some(s),
        Results::Optimize(o) => Some(&o.sweep),
        _ => None,
    };
    if let (Some(path), Some(s)) = (&csv_out, sweep_rows) {
        write_atomic(path, &render_csv(s.parameter, &s.rows)?)?;
    }
    if cli.json {
        emit_json(out, &manifest, &results)?;
    } else {
        emit_text(out, &results, csv_out.is_none())?;
    }
    if let Results::Validate(report) = &results {
        if !report.passed {
            return Err(CliError::ValidationFailed {
                failed: report.checks.iter().filter(|c| !c.passed).count(),
                total: report.checks.len(),
            });
        }
    }
    Ok(())
}

fn emit_json(out: &mut dyn Write, manifest: &RunManifest, results: &Results) -> CliResult<()> {
    let record = Record {
        manifest: manifest.clone(),
        results,
    };
    serde_json::to_writer_pretty(&mut *out, &record)?;
    writeln!(out).map_err(stdout_err)
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

fn emit_text(out: &mut dyn Write, results: &Results, csv_to_stdout: bool) -> CliResult<()> {
    let mut text = String::new();
    match results {
        Results::Compute(c) => {
            text += &format!("p_cov            {:.9}\n", c.p_cov);
            text += &format!("p_los_closest    {:.9}\n", c.p_los_closest);
            text += &format!(
                "mu_iagg_at_zero  {:.6e} W ({:.3} dBW)\n",
                c.mu_iagg_at_zero, c.mu_iagg_at_zero_dbw
            );
            text += &format!("void_ceiling     {:.9}\n", c.void_ceiling);
        }
        Results::Simulate(r) => {
            let mode = r.mode.map_or("", |m| m.as_str());
            text += &format!(
                "p_cov {:.6} ± {:.6} ({} trials, seed {}, {mode})\n",
                r.estimate, r.std_error, r.trials, r.seed
            );
        }
        Results::Sweep(s) => {
            if csv_to_stdout {
                text += &String::from_utf8_lossy(&render_csv(s.parameter, &s.rows)?);
            }
            text += &format!(
                "argmax {} = {} with p_cov {:.9}{}\n",
                s.parameter,
                value(to_display(s.parameter, s.argmax_value)),
                s.argmax_p_cov,
                if s.argmax_is_interior() {
                    ""
                } else {
                    " (grid edge)"
                }
            );
        }
        Results::Optimize(o) => {
            let p = o.sweep.parameter;
            text += &format!(
                "optimum {p} = {} with p_cov {:.9} ({})\n",
                value(to_display(p, o.value)),
                o.p_cov,
                if o.refined { "refined" } else { "grid point" }
            );
        }
        Results::Validate(v) => {
            for c in &v.checks {
                text += &format!(
                    "{} {:<24} expected {:.6e} observed {:.6e} deviation {:.3e} bound {:.3e}\n",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.expected,
                    c.observed,
                    c.deviation,
                    c.bound
                );
            }
        }
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn value(v: f64) -> String {
    if v.abs() < 1e-2 {
        format!("{v:.6e}")
    } else {
        format!("{v:.6}")
    }
}

fn replay(path: &std::path::Path, exec: Execution, out: &mut dyn Write) -> CliResult<()> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let record: Record<serde_json::Value> = serde_json::from_str(&text)?;
    let mut manifest = record.manifest;
    let results = execute(&manifest, exec)?;
    // Compare through the same text round trip the original went through.
    let fresh: serde_json::Value = serde_json::from_str(&serde_json::to_string(&results)?)?;
    manifest.timestamp = now();
    emit_json(out, &manifest, &results)?;
    if fresh != record.results {
        return Err(CliError::NotReproduced(path.to_path_buf()));
    }
    Ok(())
}
