//! Sweep grids and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use dronecov_core::optimize::{linear_grid, log_grid};
use dronecov_core::{SweepParameter, SweepRow};

use crate::error::{CliError, CliResult};

pub const CSV_HEADER: [&str; 4] = ["param", "p_cov", "p_los_closest", "mu_iagg_at_zero"];

/// Beamwidths are degrees outside the library.
pub fn to_display(parameter: SweepParameter, v: f64) -> f64 {
    match parameter {
        SweepParameter::Beamwidth => v.to_degrees(),
        _ => v,
    }
}

pub fn from_display(parameter: SweepParameter, v: f64) -> f64 {
    match parameter {
        SweepParameter::Beamwidth => v.to_radians(),
        _ => v,
    }
}

/// Parses a grid given as `lo:hi:n`, a comma list, or a file of numbers.
/// `lo:hi:n` is log-spaced for altitude and density, linear for beamwidth.
/// Values are in display units; the result is in internal units.
pub fn parse_grid(parameter: SweepParameter, spec: &str) -> CliResult<Vec<f64>> {
    let bad = |what: &str| CliError::input(format!("invalid `grid`: {what}"));
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("`{}` is not a number", s.trim())))
    };
    let display: Vec<f64> = if Path::new(spec).is_file() {
        let text = fs::read_to_string(spec).map_err(|e| CliError::io(spec, e))?;
        text.lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
            .filter(|s| !s.is_empty())
            .map(number)
            .collect::<CliResult<_>>()?
    } else if let [lo, hi, n] = spec.split(':').collect::<Vec<_>>()[..] {
        let (lo, hi) = (number(lo)?, number(hi)?);
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| bad("point count must be a positive integer"))?;
        if n == 0 || !(lo <= hi) || (n > 1 && lo == hi) {
            return Err(bad("need lo < hi and n >= 1"));
        }
        match parameter {
            SweepParameter::Beamwidth => linear_grid(lo, hi, n),
            _ if lo > 0.0 => log_grid(lo, hi, n),
            _ => return Err(bad("log-spaced grids need lo > 0")),
        }
    } else {
        spec.split(',').map(number).collect::<CliResult<_>>()?
    };
    if display.is_empty() {
        return Err(bad("no points"));
    }
    Ok(display
        .into_iter()
        .map(|v| from_display(parameter, v))
        .collect())
}

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Renders rows as CSV with 12 significant digits.
pub fn render_csv(parameter: SweepParameter, rows: &[SweepRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            sig12(to_display(parameter, r.param_value)),
            sig12(r.p_cov),
            sig12(r.p_los_closest),
            sig12(r.mu_iagg_at_zero),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::input(e.to_string()))
}

/// Writes through a sibling temporary file so a failed run leaves nothing
/// behind at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = PathBuf::from(path);
    tmp.as_mut_os_string().push(".partial");
    let result = fs::write(&tmp, bytes).and_then(|()| fs::rename(&tmp, path));
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct CsvRow {
    pub param: f64,
    pub p_cov: f64,
    pub p_los_closest: f64,
    pub mu_iagg_at_zero: f64,
}

/// Reads a sweep CSV back, keeping display units.
pub fn read_csv(bytes: &[u8]) -> CliResult<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(bytes);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(CliError::input(format!(
            "csv header must be {}",
            CSV_HEADER.join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(CliError::from))
        .collect()
}

/// Inverse of [`read_csv`].
pub fn rows_from_csv(parameter: SweepParameter, rows: &[CsvRow]) -> Vec<SweepRow> {
    rows.iter()
        .map(|r| SweepRow {
            param_value: from_display(parameter, r.param),
            p_cov: r.p_cov,
            p_los_closest: r.p_los_closest,
            mu_iagg_at_zero: r.mu_iagg_at_zero,
        })
        .collect()
}
