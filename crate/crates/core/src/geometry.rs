//! Geometry of the drone field above a ground user.
//!
//! Drones fly at a common altitude `h` and are scattered on that plane as a
//! PPP of density `lambda`. Only drones inside the disk `A` of radius
//! `h tan(phi_a / 2)` reach the user through their main lobe, so every drone
//! is reduced to its off-vertical angle `phi = atan(r / h)` right away.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::open01;
use crate::{db_to_linear, ANGLE_CEILING};

/// Transmit/noise levels, field density, altitude, beamwidth, SINR
/// threshold and carrier frequency.
///
/// All absolute powers are dBW; `phi_a` is the full beamwidth in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub pt_db: f64,
    pub n0_db: f64,
    /// Drones per square meter.
    pub lambda: f64,
    pub h: f64,
    pub phi_a: f64,
    pub t_db: f64,
    pub f: f64,
}

impl Default for SystemConfig {
    /// P_t = -6 dBW, N_0 = -150 dBW, 5 drones/km², 90° beam, 500 m,
    /// T = -5 dB, 2 GHz.
    fn default() -> Self {
        SystemConfig {
            pt_db: -6.0,
            n0_db: -150.0,
            lambda: 5e-6,
            h: 500.0,
            phi_a: PI / 2.0,
            t_db: -5.0,
            f: 2e9,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("pt_db", self.pt_db),
            ("n0_db", self.n0_db),
            ("t_db", self.t_db),
            ("lambda", self.lambda),
            ("h", self.h),
            ("phi_a", self.phi_a),
            ("f", self.f),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(key, format!("must be finite, got {v}")));
            }
        }
        if self.lambda < 0.0 {
            return Err(Error::invalid("lambda", "density must be >= 0"));
        }
        if self.h <= 0.0 {
            return Err(Error::invalid("h", "altitude must be > 0"));
        }
        if self.f <= 0.0 {
            return Err(Error::invalid("f", "frequency must be > 0"));
        }
        if self.phi_a <= 0.0 {
            return Err(Error::invalid("phi_a", "beamwidth must be > 0"));
        }
        if self.half_beam() > ANGLE_CEILING * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "phi_a",
                format!(
                    "beamwidth {:.4}° exceeds the 150° (5π/6) ceiling of the channel model",
                    self.phi_a.to_degrees()
                ),
            ));
        }
        Ok(())
    }

    /// Half beamwidth `phi_a / 2`, clipped to the model ceiling.
    #[inline]
    pub fn half_beam(&self) -> f64 {
        let half = self.phi_a / 2.0;
        if half > ANGLE_CEILING && half <= ANGLE_CEILING * (1.0 + 1e-12) {
            ANGLE_CEILING
        } else {
            half
        }
    }

    pub fn pt_linear(&self) -> f64 {
        db_to_linear(self.pt_db)
    }

    pub fn n0_linear(&self) -> f64 {
        db_to_linear(self.n0_db)
    }

    pub fn t_linear(&self) -> f64 {
        db_to_linear(self.t_db)
    }

    /// `lambda π h²`, the mean drone count per unit of `tan²(phi)`.
    #[inline]
    pub fn density_scale(&self) -> f64 {
        self.lambda * PI * self.h * self.h
    }

    /// Mean number of drones inside region A.
    pub fn mean_count(&self) -> f64 {
        let t = self.half_beam().tan();
        self.density_scale() * t * t
    }

    /// Probability of at least one drone in A; an upper bound on coverage.
    pub fn coverage_ceiling(&self) -> f64 {
        -(-self.mean_count()).exp_m1()
    }
}

/// Angles of all drones inside A for one field realization, ascending.
/// `angles[0]` is the serving (closest) drone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldRealization {
    pub angles: Vec<f64>,
}

impl FieldRealization {
    pub fn count(&self) -> usize {
        self.angles.len()
    }

    pub fn closest(&self) -> Option<f64> {
        self.angles.first().copied()
    }

    pub fn interferers(&self) -> &[f64] {
        self.angles.get(1..).unwrap_or(&[])
    }
}

fn check_angle(phi: f64) -> Result<()> {
    crate::channel::check_model_angle(phi)
}

fn check_field(lambda: f64, h: f64) -> Result<()> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda", "density must be >= 0"));
    }
    if !(h > 0.0) {
        return Err(Error::invalid("h", "altitude must be > 0"));
    }
    Ok(())
}

/// `P[Phi_c <= phi_c] = 1 - exp(-lambda π h² tan²(phi_c))`.
pub fn closest_angle_cdf(phi_c: f64, lambda: f64, h: f64) -> Result<f64> {
    check_angle(phi_c)?;
    check_field(lambda, h)?;
    let t = phi_c.tan();
    Ok(-(-lambda * PI * h * h * t * t).exp_m1())
}

/// Density of the closest-drone angle. Zero for an empty field.
pub fn closest_angle_pdf(phi_c: f64, lambda: f64, h: f64) -> Result<f64> {
    check_angle(phi_c)?;
    check_field(lambda, h)?;
    Ok(closest_pdf_unchecked(phi_c, lambda * PI * h * h))
}

/// `2 s sin/cos³ exp(-s tan²)` with `s = lambda π h²`, in log space so huge
/// `s` underflows to 0 instead of `0 * inf`.
#[inline]
pub(crate) fn closest_pdf_unchecked(phi: f64, scale: f64) -> f64 {
    if scale <= 0.0 || phi <= 0.0 {
        return 0.0;
    }
    let (s, c) = phi.sin_cos();
    let t = s / c;
    ((2.0 * scale).ln() + s.ln() - 3.0 * c.ln() - scale * t * t).exp()
}

/// Draws the closest-drone angle, or `None` when A holds no drone.
///
/// One uniform `u`: the field is void when `u >= F(phi_a/2)`, otherwise
/// `phi_c = F^{-1}(u)`. This is the truncated inverse transform.
pub fn sample_closest_angle<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Option<f64> {
    let scale = cfg.density_scale();
    if scale <= 0.0 {
        let _ = open01(rng);
        return None;
    }
    let u = open01(rng);
    if u >= cfg.coverage_ceiling() {
        return None;
    }
    let t2 = -(-u).ln_1p() / scale;
    Some(t2.sqrt().atan().min(cfg.half_beam()))
}

/// Density of an interferer's angle given the closest drone at `phi_c`:
/// uniform on the ground annulus between `phi_c` and `phi_a / 2`.
pub fn interferer_angle_pdf(phi: f64, phi_c: f64, cfg: &SystemConfig) -> Result<f64> {
    let edge = cfg.half_beam();
    if !(phi_c >= 0.0 && phi_c < edge) {
        return Err(Error::angle("phi_c", phi_c, format!("[0, {edge})")));
    }
    if !(phi >= phi_c && phi <= edge) {
        return Err(Error::angle("phi", phi, format!("[{phi_c}, {edge}]")));
    }
    let (te, tc) = (edge.tan(), phi_c.tan());
    let area_over_pi_h2 = te * te - tc * tc;
    let c = phi.cos();
    Ok(2.0 * phi.sin() / (c * c * c) / area_over_pi_h2)
}

/// Realizes the whole field inside A.
pub fn sample_field<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> FieldRealization {
    let mut angles = sample_annulus(cfg, 0.0, rng);
    angles.sort_by(f64::total_cmp);
    FieldRealization { angles }
}

/// PPP of density `lambda` on the ground annulus `phi_inner <= phi <= phi_a/2`,
/// returned as unsorted angles in draw order.
///
/// The count is Poisson with mean `lambda π h² (tan² edge − tan² inner)`;
/// points are uniform in area, which makes `tan²(phi)` uniform.
pub fn sample_annulus<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    phi_inner: f64,
    rng: &mut R,
) -> Vec<f64> {
    let edge = cfg.half_beam();
    let (te, ti) = (edge.tan(), phi_inner.min(edge).tan());
    let (t2_lo, t2_hi) = (ti * ti, te * te);
    let mean = cfg.density_scale() * (t2_hi - t2_lo);
    let n = poisson_count(mean, rng);
    (0..n)
        .map(|_| {
            let t2 = t2_lo + rng.gen::<f64>() * (t2_hi - t2_lo);
            t2.sqrt().atan().clamp(phi_inner, edge)
        })
        .collect()
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive Poisson mean");
    let draw: f64 = d.sample(rng);
    draw as u64
}
