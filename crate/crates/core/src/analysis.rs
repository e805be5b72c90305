//! Closed-form coverage analysis evaluated by adaptive quadrature.
//!
//! * [`mean_aggregate_interference`]: mean interference at the user given
//!   the serving drone's angle `phi_c`, `(2π λ P_t / K_f) Υ_I(phi_c)`.
//! * [`coverage_probability`]: `P[SINR > T]` averaged over the closest-drone
//!   angle, with the interference replaced by its conditional mean.
//! * [`avg_los_closest`]: LoS probability of the closest drone averaged
//!   over its angle.
//!
//! The coverage integral needs `mu(phi_c)` at every outer node. By default it
//! reads them from an [`InterferenceProfile`]; [`NestedStrategy::Exact`]
//! runs the inner quadrature at each node instead.

use std::cell::RefCell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{fspl_unchecked, kf, EnvironmentParams, LinkKind};
use crate::error::{Error, Result};
use crate::geometry::{closest_pdf_unchecked, SystemConfig};
use crate::quadrature::{integrate, integrate_full, QuadratureSpec};
use crate::special::q_function;
use crate::{linear_to_db, ANGLE_CEILING};

/// Default number of profile nodes.
pub const DEFAULT_GRID_SIZE: usize = 256;

/// `exp(-s)` is below the smallest subnormal past this exponent.
const EXP_FLOOR: f64 = 745.0;

/// Scale points `lambda π h² tan²(phi)` where the closest-drone density
/// changes shape; used as initial breakpoints of the outer integrals.
const SCALE_BREAKS: [f64; 7] = [0.0625, 0.25, 1.0, 4.0, 16.0, 64.0, 256.0];

/// How the coverage integral obtains the inner mean interference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NestedStrategy {
    /// Precompute `mu` on a uniform grid and interpolate.
    Profile { grid_size: usize },
    /// Fresh inner quadrature per outer node at the tightened tolerance.
    Exact,
}

impl Default for NestedStrategy {
    fn default() -> Self {
        NestedStrategy::Profile {
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

/// Integrand of `Υ_I`: `tan(phi) [P_LoS E[1/Ψ_LoS] + P_NLoS E[1/Ψ_NLoS]]`.
#[inline]
fn interference_density(env: &EnvironmentParams, phi: f64) -> f64 {
    let p = env.p_los_unchecked(phi);
    phi.tan()
        * (p * env.mean_inverse_unchecked(phi, LinkKind::Los)
            + (1.0 - p) * env.mean_inverse_unchecked(phi, LinkKind::Nlos))
}

/// `2π λ P_t / K_f`, watts per unit of `Υ_I`.
pub fn interference_prefactor(cfg: &SystemConfig) -> f64 {
    2.0 * PI * cfg.lambda * cfg.pt_linear() / kf(cfg.f)
}

fn check_phi_c(phi_c: f64, edge: f64) -> Result<()> {
    if phi_c >= 0.0 && phi_c <= edge * (1.0 + 1e-12) {
        Ok(())
    } else {
        Err(Error::angle("phi_c", phi_c, format!("[0, {edge}]")))
    }
}

/// `Υ_I(phi_c) = ∫_{phi_c}^{phi_a/2} tan φ [ ... ] dφ`, dimensionless.
pub fn upsilon_i(
    phi_c: f64,
    env: &EnvironmentParams,
    phi_a: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let edge = phi_a / 2.0;
    if !(edge > 0.0 && edge <= ANGLE_CEILING * (1.0 + 1e-12)) {
        return Err(Error::angle("phi_a / 2", edge, "(0, 5π/12]"));
    }
    let edge = edge.min(ANGLE_CEILING);
    check_phi_c(phi_c, edge)?;
    if phi_c >= edge {
        return Ok(0.0);
    }
    integrate(|p| interference_density(env, p), phi_c, edge, quad)
}

/// Mean aggregate interference in watts given the closest drone at `phi_c`.
/// Does not depend on the altitude.
pub fn mean_aggregate_interference(
    phi_c: f64,
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    cfg.validate()?;
    if cfg.lambda == 0.0 {
        check_phi_c(phi_c, cfg.half_beam())?;
        return Ok(0.0);
    }
    Ok(interference_prefactor(cfg) * upsilon_i(phi_c, env, cfg.phi_a, quad)?)
}

/// `ψ(phi_c)` in dB for a given mean interference `mu` (watts).
#[inline]
pub(crate) fn psi_db(phi_c: f64, mu: f64, cfg: &SystemConfig) -> f64 {
    cfg.pt_db
        - linear_to_db(mu + cfg.n0_linear())
        - linear_to_db(fspl_unchecked(phi_c, cfg.h, cfg.f))
        - cfg.t_db
}

/// `ψ(phi_c) = 10 log10(P_t / ((mu(phi_c) + N_0) L_f(phi_c) T))`, dB.
pub fn psi_threshold(
    phi_c: f64,
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let mu = mean_aggregate_interference(phi_c, cfg, env, quad)?;
    Ok(psi_db(phi_c, mu, cfg))
}

/// `P[SINR > T | Phi_c = phi_c]` under the mean-interference SINR.
#[inline]
pub(crate) fn conditional_coverage(phi_c: f64, psi: f64, env: &EnvironmentParams) -> f64 {
    let p = env.p_los_unchecked(phi_c);
    let los = q_function((env.mu_los_db - psi) / env.sigma_unchecked(phi_c, LinkKind::Los));
    let nlos = q_function((env.mu_nlos_db - psi) / env.sigma_unchecked(phi_c, LinkKind::Nlos));
    los * p + nlos * (1.0 - p)
}

/// Mean interference tabulated on a uniform `phi_c` grid over `[0, phi_a/2]`
/// with a monotone cubic Hermite interpolant between nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceProfile {
    phi_grid: Vec<f64>,
    mu_values: Vec<f64>,
    slopes: Vec<f64>,
    cfg_fingerprint: u64,
}

impl InterferenceProfile {
    pub fn phi_grid(&self) -> &[f64] {
        &self.phi_grid
    }

    pub fn mu_values(&self) -> &[f64] {
        &self.mu_values
    }

    /// Hash of the inputs the profile depends on (see [`profile_fingerprint`]).
    pub fn cfg_fingerprint(&self) -> u64 {
        self.cfg_fingerprint
    }

    /// Interpolated mean interference in watts; clamps `phi` into the grid.
    pub fn eval(&self, phi: f64) -> f64 {
        let n = self.phi_grid.len();
        let (lo, hi) = (self.phi_grid[0], self.phi_grid[n - 1]);
        let phi = phi.clamp(lo, hi);
        let step = (hi - lo) / (n - 1) as f64;
        let k = (((phi - lo) / step) as usize).min(n - 2);
        let (x0, x1) = (self.phi_grid[k], self.phi_grid[k + 1]);
        let width = x1 - x0;
        let t = ((phi - x0) / width).clamp(0.0, 1.0);
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * self.mu_values[k]
            + h10 * width * self.slopes[k]
            + h01 * self.mu_values[k + 1]
            + h11 * width * self.slopes[k + 1];
        v.max(0.0)
    }
}

fn fnv1a(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for w in words {
        for b in w.to_le_bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        }
    }
    hash
}

/// Stable hash of everything the interference profile depends on.
/// Altitude, noise and threshold are excluded: `mu` does not depend on them.
pub fn profile_fingerprint(cfg: &SystemConfig, env: &EnvironmentParams, grid_size: usize) -> u64 {
    fnv1a([
        cfg.pt_db.to_bits(),
        cfg.lambda.to_bits(),
        cfg.phi_a.to_bits(),
        cfg.f.to_bits(),
        env.a_los.to_bits(),
        env.b_los.to_bits(),
        env.a_nlos.to_bits(),
        env.b_nlos.to_bits(),
        env.mu_los_db.to_bits(),
        env.mu_nlos_db.to_bits(),
        env.beta1.to_bits(),
        env.beta2.to_bits(),
        grid_size as u64,
    ])
}

/// Tabulates `mu(phi_c)` on `grid_size` uniform nodes over `[0, phi_a/2]`.
///
/// Node values are suffix sums of per-panel integrals, so they are exactly
/// nonincreasing and the last node is exactly zero. Node slopes are the
/// exact derivative `-prefactor · density(phi)`, passed through the
/// Fritsch-Carlson limiter.
pub fn build_interference_profile(
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    quad: &QuadratureSpec,
    grid_size: usize,
) -> Result<InterferenceProfile> {
    if grid_size < 16 {
        return Err(Error::invalid("grid_size", "must be >= 16"));
    }
    cfg.validate()?;
    quad.validate()?;
    let edge = cfg.half_beam();
    let step = edge / (grid_size - 1) as f64;
    let phi_grid: Vec<f64> = (0..grid_size)
        .map(|i| {
            if i == grid_size - 1 {
                edge
            } else {
                i as f64 * step
            }
        })
        .collect();
    let prefactor = interference_prefactor(cfg);

    let panels = phi_grid
        .windows(2)
        .map(|w| integrate(|p| interference_density(env, p), w[0], w[1], quad))
        .collect::<Result<Vec<f64>>>()?;
    let mut mu_values = vec![0.0; grid_size];
    let mut acc = 0.0;
    for i in (0..grid_size - 1).rev() {
        acc += panels[i];
        mu_values[i] = prefactor * acc;
    }

    let mut slopes: Vec<f64> = phi_grid
        .iter()
        .map(|&p| -prefactor * interference_density(env, p))
        .collect();
    for k in 0..grid_size - 1 {
        let secant = (mu_values[k + 1] - mu_values[k]) / (phi_grid[k + 1] - phi_grid[k]);
        if secant == 0.0 {
            slopes[k] = 0.0;
            slopes[k + 1] = 0.0;
            continue;
        }
        let a = (slopes[k] / secant).max(0.0);
        let b = (slopes[k + 1] / secant).max(0.0);
        let r = a.hypot(b);
        let tau = if r > 3.0 { 3.0 / r } else { 1.0 };
        slopes[k] = tau * a * secant;
        slopes[k + 1] = tau * b * secant;
    }

    Ok(InterferenceProfile {
        phi_grid,
        mu_values,
        slopes,
        cfg_fingerprint: profile_fingerprint(cfg, env, grid_size),
    })
}

/// Largest angle with a representable closest-drone density, and the
/// initial breakpoints below it.
fn outer_points(cfg: &SystemConfig) -> Vec<f64> {
    let scale = cfg.density_scale();
    let edge = cfg.half_beam();
    let upper = edge.min((EXP_FLOOR / scale).sqrt().atan());
    let mut points = vec![0.0];
    points.extend(
        SCALE_BREAKS
            .iter()
            .map(|s| (s / scale).sqrt().atan())
            .filter(|&p| p > 0.0 && p < upper),
    );
    points.push(upper);
    points
}

fn coverage_outer<M: Fn(f64) -> f64>(
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    quad: &QuadratureSpec,
    mu_at: M,
) -> Result<f64> {
    if cfg.lambda == 0.0 {
        return Ok(0.0);
    }
    let scale = cfg.density_scale();
    let r = integrate_full(
        |phi| {
            let w = closest_pdf_unchecked(phi, scale);
            if w == 0.0 {
                return 0.0;
            }
            w * conditional_coverage(phi, psi_db(phi, mu_at(phi), cfg), env)
        },
        &outer_points(cfg),
        quad,
    )?;
    Ok(r.value.clamp(0.0, cfg.coverage_ceiling()))
}

/// Coverage probability with the default profile strategy.
pub fn coverage_probability(
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    coverage_probability_with(cfg, env, quad, NestedStrategy::default())
}

pub fn coverage_probability_with(
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    quad: &QuadratureSpec,
    strategy: NestedStrategy,
) -> Result<f64> {
    cfg.validate()?;
    quad.validate()?;
    if cfg.lambda == 0.0 {
        return Ok(0.0);
    }
    match strategy {
        NestedStrategy::Profile { grid_size } => {
            let profile = build_interference_profile(cfg, env, quad, grid_size)?;
            coverage_from_profile(cfg, env, quad, &profile)
        }
        NestedStrategy::Exact => {
            let inner = quad.inner();
            let failure: RefCell<Option<Error>> = RefCell::new(None);
            let value = coverage_outer(cfg, env, quad, |phi| {
                match mean_aggregate_interference(phi, cfg, env, &inner) {
                    Ok(mu) => mu,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                }
            });
            match failure.into_inner() {
                Some(e) => Err(e),
                None => value,
            }
        }
    }
}

/// Coverage probability reusing a prebuilt profile. The profile must come
/// from the same interference inputs; altitude, noise and threshold may
/// differ.
pub fn coverage_from_profile(
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    quad: &QuadratureSpec,
    profile: &InterferenceProfile,
) -> Result<f64> {
    cfg.validate()?;
    if profile.cfg_fingerprint != profile_fingerprint(cfg, env, profile.phi_grid.len()) {
        return Err(Error::ProfileMismatch);
    }
    coverage_outer(cfg, env, quad, |phi| profile.eval(phi))
}

/// Average LoS probability of the closest drone (void fields count as 0).
pub fn avg_los_closest(
    cfg: &SystemConfig,
    env: &EnvironmentParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    cfg.validate()?;
    quad.validate()?;
    if cfg.lambda == 0.0 {
        return Ok(0.0);
    }
    let scale = cfg.density_scale();
    let r = integrate_full(
        |phi| closest_pdf_unchecked(phi, scale) * env.p_los_unchecked(phi),
        &outer_points(cfg),
        quad,
    )?;
    Ok(r.value.clamp(0.0, cfg.coverage_ceiling()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::fspl;
    use crate::geometry::closest_angle_cdf;
    use crate::{db_to_linear, SPEED_OF_LIGHT};
    use approx::assert_relative_eq;

    fn urban() -> EnvironmentParams {
        EnvironmentParams::urban()
    }

    fn lossless() -> EnvironmentParams {
        EnvironmentParams {
            name: "lossless".into(),
            a_los: 1e-300,
            b_los: 0.0,
            a_nlos: 1e-300,
            b_nlos: 0.0,
            mu_los_db: 0.0,
            mu_nlos_db: 0.0,
            beta1: 0.5,
            beta2: 0.3,
        }
    }

    /// Composite Simpson rule with a fixed panel count.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
        let n = panels + panels % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn upsilon_empty_interval() {
        let q = QuadratureSpec::default();
        assert_eq!(upsilon_i(PI / 4.0, &urban(), PI / 2.0, &q).unwrap(), 0.0);
        assert!(upsilon_i(0.9, &urban(), PI / 2.0, &q).is_err());
        assert!(upsilon_i(0.1, &urban(), 3.0, &q).is_err());
    }

    #[test]
    fn upsilon_lossless_reduces_to_log_cos() {
        let q = QuadratureSpec::default();
        for (phi_c, phi_a) in [(0.0, PI / 2.0), (0.3, 2.0), (0.1, 5.0 * PI / 6.0)] {
            let v = upsilon_i(phi_c, &lossless(), phi_a, &q).unwrap();
            let exact = (f64::cos(phi_c) / (phi_a / 2.0).cos()).ln();
            assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
        }
    }

    #[test]
    fn upsilon_matches_brute_force_simpson() {
        let q = QuadratureSpec::default();
        let env = urban();
        let v = upsilon_i(0.0, &env, PI / 2.0, &q).unwrap();
        let brute = simpson(
            |p| {
                let pl = env.beta1 * (ANGLE_CEILING - p).powf(env.beta2);
                let el = 10f64.powf(
                    (-env.mu_los_db
                        + crate::DB_TO_NEPER * (env.a_los * (env.b_los * p).exp()).powi(2) / 2.0)
                        / 10.0,
                );
                let en = 10f64.powf(
                    (-env.mu_nlos_db
                        + crate::DB_TO_NEPER * (env.a_nlos * (env.b_nlos * p).exp()).powi(2) / 2.0)
                        / 10.0,
                );
                p.tan() * (pl * el + (1.0 - pl) * en)
            },
            0.0,
            PI / 4.0,
            1_000_000,
        );
        assert_relative_eq!(v, brute, max_relative = 1e-8);
    }

    #[test]
    fn interference_linear_and_altitude_free() {
        let q = QuadratureSpec::default();
        let env = urban();
        let cfg = SystemConfig::default();
        assert_eq!(
            mean_aggregate_interference(0.1, &SystemConfig { lambda: 0.0, ..cfg }, &env, &q)
                .unwrap(),
            0.0
        );
        let base = mean_aggregate_interference(0.1, &cfg, &env, &q).unwrap();
        let doubled = mean_aggregate_interference(
            0.1,
            &SystemConfig {
                lambda: 2.0 * cfg.lambda,
                ..cfg
            },
            &env,
            &q,
        )
        .unwrap();
        assert!((doubled / base - 2.0).abs() <= 2.0 * 1e-12);
        let low =
            mean_aggregate_interference(0.1, &SystemConfig { h: 100.0, ..cfg }, &env, &q).unwrap();
        let high =
            mean_aggregate_interference(0.1, &SystemConfig { h: 1000.0, ..cfg }, &env, &q).unwrap();
        assert_eq!(low, high);
        let louder = SystemConfig {
            pt_db: cfg.pt_db + 10.0,
            ..cfg
        };
        assert_relative_eq!(
            mean_aggregate_interference(0.1, &louder, &env, &q).unwrap(),
            10.0 * base,
            max_relative = 1e-12
        );
    }

    #[test]
    fn interference_grows_with_beamwidth() {
        let q = QuadratureSpec::default();
        let env = urban();
        let mut prev = 0.0;
        for deg in (20..=150).step_by(10) {
            let cfg = SystemConfig {
                phi_a: (deg as f64).to_radians(),
                ..Default::default()
            };
            let mu = mean_aggregate_interference(0.05, &cfg, &env, &q).unwrap();
            assert!(mu >= prev);
            prev = mu;
        }
    }

    #[test]
    fn psi_unit_argument_and_threshold_shift() {
        let q = QuadratureSpec::default();
        let env = urban();
        let base = SystemConfig {
            lambda: 0.0,
            ..Default::default()
        };
        let lf = fspl(0.3, base.h, base.f).unwrap();
        let n0 = base.pt_linear() / (lf * base.t_linear());
        let cfg = SystemConfig {
            n0_db: linear_to_db(n0),
            ..base
        };
        assert!(psi_threshold(0.3, &cfg, &env, &q).unwrap().abs() < 1e-9);

        let cfg = SystemConfig::default();
        let a = psi_threshold(0.2, &cfg, &env, &q).unwrap();
        let b = psi_threshold(
            0.2,
            &SystemConfig {
                t_db: cfg.t_db + 10.0,
                ..cfg
            },
            &env,
            &q,
        )
        .unwrap();
        assert!((a - b - 10.0).abs() < 1e-12);
    }

    #[test]
    fn psi_composes_interference_and_path_loss() {
        let q = QuadratureSpec::default();
        let env = urban();
        let cfg = SystemConfig::default();
        let mu = mean_aggregate_interference(0.2, &cfg, &env, &q).unwrap();
        let k = (4.0 * PI * cfg.f / SPEED_OF_LIGHT).powi(2);
        let lf = k * cfg.h * cfg.h / f64::cos(0.2).powi(2);
        let by_hand = 10.0
            * (db_to_linear(cfg.pt_db)
                / ((mu + db_to_linear(cfg.n0_db)) * lf * db_to_linear(cfg.t_db)))
            .log10();
        assert_relative_eq!(
            psi_threshold(0.2, &cfg, &env, &q).unwrap(),
            by_hand,
            max_relative = 1e-12
        );
    }

    #[test]
    fn psi_decreases_with_altitude_density_threshold() {
        let q = QuadratureSpec::default();
        let env = urban();
        let cfg = SystemConfig::default();
        let base = psi_threshold(0.2, &cfg, &env, &q).unwrap();
        for other in [
            SystemConfig { h: 600.0, ..cfg },
            SystemConfig {
                lambda: 6e-6,
                ..cfg
            },
            SystemConfig { t_db: -4.0, ..cfg },
        ] {
            assert!(psi_threshold(0.2, &other, &env, &q).unwrap() < base);
        }
    }

    #[test]
    fn profile_shape_and_accuracy() {
        let q = QuadratureSpec::default();
        let env = urban();
        let cfg = SystemConfig::default();
        let profile = build_interference_profile(&cfg, &env, &q, 256).unwrap();
        assert_eq!(*profile.mu_values().last().unwrap(), 0.0);
        assert!(profile.mu_values().windows(2).all(|w| w[0] >= w[1]));
        let grid = profile.phi_grid();
        for k in [0usize, 3, 60, 128, 200, 250, 254] {
            let mid = 0.5 * (grid[k] + grid[k + 1]);
            let direct = mean_aggregate_interference(mid, &cfg, &env, &q).unwrap();
            let interp = profile.eval(mid);
            assert!(
                (interp - direct).abs() <= 1e-4 * direct,
                "{k}: {interp} vs {direct}"
            );
        }
        // Dense scan: monotone and nonnegative between nodes.
        let scan: Vec<f64> = (0..=5000)
            .map(|i| profile.eval(cfg.half_beam() * i as f64 / 5000.0))
            .collect();
        assert!(scan.windows(2).all(|w| w[0] >= w[1]));
        assert!(scan.iter().all(|&v| v >= 0.0));
        assert!(build_interference_profile(&cfg, &env, &q, 8).is_err());
    }

    #[test]
    fn profile_mismatch_detected() {
        let q = QuadratureSpec::default();
        let env = urban();
        let cfg = SystemConfig::default();
        let profile = build_interference_profile(&cfg, &env, &q, 64).unwrap();
        let taller = SystemConfig { h: 1500.0, ..cfg };
        coverage_from_profile(&taller, &env, &q, &profile).unwrap();
        let denser = SystemConfig {
            lambda: 1e-5,
            ..cfg
        };
        assert_eq!(
            coverage_from_profile(&denser, &env, &q, &profile),
            Err(Error::ProfileMismatch)
        );
    }

    #[test]
    fn coverage_limits() {
        let q = QuadratureSpec::default();
        let env = urban();
        let cfg = SystemConfig::default();
        assert_eq!(
            coverage_probability(&SystemConfig { lambda: 0.0, ..cfg }, &env, &q).unwrap(),
            0.0
        );
        let free = SystemConfig {
            t_db: -200.0,
            ..cfg
        };
        let p = coverage_probability(&free, &env, &q).unwrap();
        assert!((p - cfg.coverage_ceiling()).abs() < 1e-4);
        assert!((p - closest_angle_cdf(cfg.half_beam(), cfg.lambda, cfg.h).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn coverage_profile_matches_exact_nested() {
        let q = QuadratureSpec::default();
        let env = urban();
        for cfg in [
            SystemConfig::default(),
            SystemConfig {
                h: 150.0,
                ..Default::default()
            },
            SystemConfig {
                lambda: 3e-5,
                phi_a: 2.2,
                ..Default::default()
            },
        ] {
            let profiled = coverage_probability(&cfg, &env, &q).unwrap();
            let exact = coverage_probability_with(&cfg, &env, &q, NestedStrategy::Exact).unwrap();
            assert!((profiled - exact).abs() < 1e-6, "{profiled} vs {exact}");
        }
    }

    #[test]
    fn coverage_tolerance_regression() {
        let env = urban();
        let cfg = SystemConfig::default();
        let coarse = QuadratureSpec::default();
        let fine = QuadratureSpec {
            rel_tol: coarse.rel_tol / 2.0,
            ..coarse
        };
        let a = coverage_probability(&cfg, &env, &coarse).unwrap();
        let b = coverage_probability(&cfg, &env, &fine).unwrap();
        assert!((a - b).abs() <= coarse.rel_tol.max(coarse.abs_tol) * a.max(1.0));
        let a = avg_los_closest(&cfg, &env, &coarse).unwrap();
        let b = avg_los_closest(&cfg, &env, &fine).unwrap();
        assert!((a - b).abs() <= coarse.rel_tol * a.max(1.0));
    }

    #[test]
    fn dense_field_stays_finite() {
        let q = QuadratureSpec::default();
        let env = urban();
        let cfg = SystemConfig {
            lambda: 1e-3,
            h: 3000.0,
            phi_a: 150f64.to_radians(),
            ..Default::default()
        };
        let p = coverage_probability(&cfg, &env, &q).unwrap();
        assert!(p.is_finite() && (0.0..=1.0).contains(&p));
        let l = avg_los_closest(&cfg, &env, &q).unwrap();
        assert!(l.is_finite() && l > 0.0);
    }

    #[test]
    fn avg_los_limits() {
        let q = QuadratureSpec::default();
        let cfg = SystemConfig::default();
        let narrow = SystemConfig { phi_a: 1e-9, ..cfg };
        assert!(avg_los_closest(&narrow, &urban(), &q).unwrap() < 1e-12);
        let mut certain = urban();
        certain.beta1 = 1.0;
        certain.beta2 = 0.0;
        let v = avg_los_closest(&cfg, &certain, &q).unwrap();
        assert!((v - closest_angle_cdf(cfg.half_beam(), cfg.lambda, cfg.h).unwrap()).abs() < 1e-8);
        let v = avg_los_closest(&cfg, &urban(), &q).unwrap();
        assert!(v > 0.0 && v <= cfg.coverage_ceiling());
    }

    #[test]
    fn avg_los_nondecreasing_in_beamwidth() {
        let q = QuadratureSpec::default();
        let env = urban();
        let values: Vec<f64> = (10..=150)
            .step_by(5)
            .map(|d| {
                let cfg = SystemConfig {
                    phi_a: (d as f64).to_radians(),
                    ..Default::default()
                };
                avg_los_closest(&cfg, &env, &q).unwrap()
            })
            .collect();
        assert!(values.windows(2).all(|w| w[1] - w[0] >= -1e-10));
    }
}
