//! Parameter sweeps and coverage maximization over altitude, density and
//! beamwidth.
//!
//! The mean interference does not depend on the altitude, so altitude
//! sweeps build one interference profile and reuse it at every point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    avg_los_closest, build_interference_profile, coverage_from_profile, coverage_probability_with,
    mean_aggregate_interference, InterferenceProfile, NestedStrategy,
};
use crate::channel::EnvironmentParams;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::SystemConfig;
use crate::quadrature::QuadratureSpec;

/// Relative tolerance of the refined optimum.
pub const REFINE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Altitude `h`, meters.
    Altitude,
    /// Density `lambda`, drones per m².
    Density,
    /// Full beamwidth `phi_a`, radians.
    Beamwidth,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Altitude => "altitude",
            SweepParameter::Density => "density",
            SweepParameter::Beamwidth => "beamwidth",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(&self, base: &SystemConfig, value: f64) -> SystemConfig {
        let mut cfg = *base;
        match self {
            SweepParameter::Altitude => cfg.h = value,
            SweepParameter::Density => cfg.lambda = value,
            SweepParameter::Beamwidth => cfg.phi_a = value,
        }
        cfg
    }

    /// 100-3000 m (30 log points), 1e-7-1e-4 m⁻² (31 log points) or
    /// 10°-150° (29 points).
    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            SweepParameter::Altitude => log_grid(100.0, 3000.0, 30),
            SweepParameter::Density => log_grid(1e-7, 1e-4, 31),
            SweepParameter::Beamwidth => linear_grid(10f64.to_radians(), 150f64.to_radians(), 29),
        }
    }

    /// Whether the interference profile changes with this parameter.
    pub fn affects_interference(&self) -> bool {
        !matches!(self, SweepParameter::Altitude)
    }

    fn log_scaled(self) -> bool {
        !matches!(self, SweepParameter::Beamwidth)
    }

    fn search_coord(self, v: f64) -> f64 {
        if self.log_scaled() {
            v.ln()
        } else {
            v
        }
    }

    fn value_at(self, s: f64) -> f64 {
        if self.log_scaled() {
            s.exp()
        } else {
            s
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "altitude" | "h" => Ok(SweepParameter::Altitude),
            "density" | "lambda" => Ok(SweepParameter::Density),
            "beamwidth" | "phi_a" => Ok(SweepParameter::Beamwidth),
            other => Err(Error::invalid(
                "param",
                format!("expected altitude, density or beamwidth, got `{other}`"),
            )),
        }
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    spaced(n, |t| (a + t * (b - a)).exp(), lo, hi)
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    spaced(n, |t| lo + t * (hi - lo), lo, hi)
}

fn spaced(n: usize, at: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| match i {
                0 => lo,
                i if i == n - 1 => hi,
                i => at(i as f64 / (n - 1) as f64),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    pub base_cfg: SystemConfig,
    pub env: EnvironmentParams,
    pub quad: QuadratureSpec,
    pub strategy: NestedStrategy,
}

impl SweepSpec {
    /// Sweep over the parameter's default grid with default numerics.
    pub fn new(parameter: SweepParameter, base_cfg: SystemConfig, env: EnvironmentParams) -> Self {
        SweepSpec {
            parameter,
            grid: parameter.default_grid(),
            base_cfg,
            env,
            quad: QuadratureSpec::default(),
            strategy: NestedStrategy::default(),
        }
    }

    pub fn with_grid(self, grid: Vec<f64>) -> Self {
        SweepSpec { grid, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("grid", "must not be empty"));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", "must be strictly increasing"));
        }
        for &v in &self.grid {
            self.parameter
                .apply(&self.base_cfg, v)
                .validate()
                .map_err(|e| self.annotate(v, e))?;
        }
        self.env.validate()?;
        self.quad.validate()
    }

    fn annotate(&self, value: f64, source: Error) -> Error {
        Error::SweepPoint {
            parameter: self.parameter.name(),
            value,
            source: Box::new(source),
        }
    }

    /// Shared profile for sweeps whose parameter leaves `mu` unchanged.
    fn shared_profile(&self) -> Result<Option<InterferenceProfile>> {
        match self.strategy {
            NestedStrategy::Profile { grid_size } if !self.parameter.affects_interference() => {
                build_interference_profile(&self.base_cfg, &self.env, &self.quad, grid_size)
                    .map(Some)
            }
            _ => Ok(None),
        }
    }

    fn coverage_at(&self, value: f64, shared: Option<&InterferenceProfile>) -> Result<f64> {
        let cfg = self.parameter.apply(&self.base_cfg, value);
        match shared {
            Some(profile) => coverage_from_profile(&cfg, &self.env, &self.quad, profile),
            None => coverage_probability_with(&cfg, &self.env, &self.quad, self.strategy),
        }
        .map_err(|e| self.annotate(value, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param_value: f64,
    pub p_cov: f64,
    pub p_los_closest: f64,
    /// Mean interference with the serving drone at the zenith, watts.
    pub mu_iagg_at_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
    pub argmax_value: f64,
    pub argmax_p_cov: f64,
}

impl SweepResult {
    pub fn argmax_index(&self) -> usize {
        self.rows
            .iter()
            .position(|r| r.param_value == self.argmax_value)
            .expect("argmax is a member of rows")
    }

    /// True when the best grid point is neither the first nor the last.
    pub fn argmax_is_interior(&self) -> bool {
        let i = self.argmax_index();
        i > 0 && i + 1 < self.rows.len()
    }
}

/// Evaluates coverage, average LoS probability and `mu(0)` at every grid
/// point. Rows follow grid order; ties for the maximum go to the smaller
/// parameter value.
pub fn sweep(spec: &SweepSpec, execution: Execution) -> Result<SweepResult> {
    spec.validate()?;
    let shared = spec.shared_profile()?;
    let rows = execution.try_map(spec.grid.len(), |i| {
        let value = spec.grid[i];
        let cfg = spec.parameter.apply(&spec.base_cfg, value);
        let p_cov = spec.coverage_at(value, shared.as_ref())?;
        let p_los_closest =
            avg_los_closest(&cfg, &spec.env, &spec.quad).map_err(|e| spec.annotate(value, e))?;
        let mu_iagg_at_zero = mean_aggregate_interference(0.0, &cfg, &spec.env, &spec.quad)
            .map_err(|e| spec.annotate(value, e))?;
        Ok(SweepRow {
            param_value: value,
            p_cov,
            p_los_closest,
            mu_iagg_at_zero,
        })
    })?;
    let best = rows
        .iter()
        .fold(None::<&SweepRow>, |best, r| match best {
            Some(b) if r.p_cov <= b.p_cov => Some(b),
            _ => Some(r),
        })
        .expect("grid is nonempty");
    Ok(SweepResult {
        parameter: spec.parameter,
        argmax_value: best.param_value,
        argmax_p_cov: best.p_cov,
        rows,
    })
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`, stopping
/// once the bracket is narrower than `tol`. Returns the best evaluated
/// point.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Refines the coverage maximum inside `bracket` by golden-section search
/// to a relative tolerance of [`REFINE_TOL`].
///
/// Requires the bracket midpoint to beat both endpoints; otherwise returns
/// [`Error::NotUnimodal`] and the caller should keep the grid argmax.
/// Altitude and density are searched on a log scale.
pub fn refine_argmax(spec: &SweepSpec, bracket: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = bracket;
    if !(lo < hi) {
        return Err(Error::invalid(
            "bracket",
            format!("need lo < hi, got [{lo}, {hi}]"),
        ));
    }
    let param = spec.parameter;
    let cover = spec.clone().with_grid(vec![lo, hi]);
    cover.validate()?;
    let shared = spec.shared_profile()?;
    let objective = |s: f64| spec.coverage_at(param.value_at(s), shared.as_ref());

    let (s_lo, s_hi) = (param.search_coord(lo), param.search_coord(hi));
    let s_mid = 0.5 * (s_lo + s_hi);
    let (p_lo, p_mid, p_hi) = (objective(s_lo)?, objective(s_mid)?, objective(s_hi)?);
    if !(p_mid > p_lo && p_mid > p_hi) {
        return Err(Error::NotUnimodal { lo, hi });
    }
    let tol = if param.log_scaled() {
        REFINE_TOL
    } else {
        REFINE_TOL * param.value_at(s_mid).abs()
    };
    let (s_best, p_best) = golden_section_max(objective, s_lo, s_hi, tol)?;
    Ok(if p_best >= p_mid {
        (param.value_at(s_best), p_best)
    } else {
        (param.value_at(s_mid), p_mid)
    })
}

/// Grid sweep followed by refinement around the best interior point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub value: f64,
    pub p_cov: f64,
    /// False when the grid argmax was kept (edge argmax or failed probe).
    pub refined: bool,
    pub sweep: SweepResult,
}

pub fn optimize(spec: &SweepSpec, execution: Execution) -> Result<Optimum> {
    let sweep = sweep(spec, execution)?;
    let i = sweep.argmax_index();
    let grid_best = Optimum {
        value: sweep.argmax_value,
        p_cov: sweep.argmax_p_cov,
        refined: false,
        sweep: sweep.clone(),
    };
    if !sweep.argmax_is_interior() {
        return Ok(grid_best);
    }
    let bracket = (sweep.rows[i - 1].param_value, sweep.rows[i + 1].param_value);
    match refine_argmax(spec, bracket) {
        Ok((value, p_cov)) if p_cov >= sweep.argmax_p_cov => Ok(Optimum {
            value,
            p_cov,
            refined: true,
            sweep,
        }),
        Ok(_) | Err(Error::NotUnimodal { .. }) => Ok(grid_best),
        Err(e) => Err(e),
    }
}
