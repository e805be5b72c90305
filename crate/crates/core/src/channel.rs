//! Air-to-ground channel: free-space loss, elevation-dependent log-normal
//! shadowing and the LoS probability.
//!
//! Angles are the off-vertical angle `phi` seen from the user, in radians.
//! The shadowing and LoS laws are only defined on `[0, ANGLE_CEILING]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{db_to_linear, ANGLE_CEILING, DB_TO_NEPER, SPEED_OF_LIGHT};

/// Parameter sets shipped with the crate.
pub const BUILTIN_ENVIRONMENTS: &str = include_str!("../data/environments.toml");

/// Slack for angles that should equal the ceiling but picked up rounding
/// in a degree-to-radian conversion.
const ANGLE_SLACK: f64 = 1e-12;

/// Propagation state of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    Los,
    Nlos,
}

/// One sampled link: its propagation state and the linear excess loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub kind: LinkKind,
    pub psi_linear: f64,
}

impl LinkState {
    pub fn is_los(&self) -> bool {
        self.kind == LinkKind::Los
    }
}

/// Frequency- and environment-dependent channel constants.
///
/// `sigma_x(phi) = a_x * exp(b_x * phi)` dB, excess loss means in dB, and
/// `P_LoS(phi) = beta1 * (5π/12 - phi)^beta2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentParams {
    pub name: String,
    pub a_los: f64,
    pub b_los: f64,
    pub a_nlos: f64,
    pub b_nlos: f64,
    pub mu_los_db: f64,
    pub mu_nlos_db: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// Keys recognized in an environment block, in file order.
pub const ENVIRONMENT_KEYS: [&str; 8] = [
    "a_los",
    "b_los",
    "a_nlos",
    "b_nlos",
    "mu_los_db",
    "mu_nlos_db",
    "beta1",
    "beta2",
];

impl EnvironmentParams {
    /// The shipped urban set.
    pub fn urban() -> Self {
        EnvironmentSet::builtin()
            .get("urban")
            .expect("builtin urban environment")
            .clone()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("a_los", self.a_los),
            ("b_los", self.b_los),
            ("a_nlos", self.a_nlos),
            ("b_nlos", self.b_nlos),
            ("mu_los_db", self.mu_los_db),
            ("mu_nlos_db", self.mu_nlos_db),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(key, format!("must be finite, got {v}")));
            }
        }
        if self.a_los <= 0.0 {
            return Err(Error::invalid("a_los", "must be > 0"));
        }
        if self.a_nlos <= 0.0 {
            return Err(Error::invalid("a_nlos", "must be > 0"));
        }
        if self.beta1 <= 0.0 {
            return Err(Error::invalid("beta1", "must be > 0"));
        }
        if self.beta2 < 0.0 {
            return Err(Error::invalid("beta2", "must be >= 0"));
        }
        let at_zenith = self.beta1 * ANGLE_CEILING.powf(self.beta2);
        if at_zenith > 1.0 + 1e-12 {
            return Err(Error::invalid(
                "beta1",
                format!("beta1 * (5π/12)^beta2 = {at_zenith:.6} exceeds 1, LoS probability at phi = 0 is not a probability"),
            ));
        }
        Ok(())
    }

    pub fn shadow_sigma(&self, phi: f64, kind: LinkKind) -> Result<f64> {
        check_model_angle(phi)?;
        Ok(self.sigma_unchecked(phi, kind))
    }

    pub fn p_los(&self, phi: f64) -> Result<f64> {
        check_model_angle(phi)?;
        Ok(self.p_los_unchecked(phi))
    }

    /// `E[1/Psi]` for the chosen state, from the log-normal law of `Psi`.
    pub fn mean_inverse_shadowing(&self, phi: f64, kind: LinkKind) -> Result<f64> {
        check_model_angle(phi)?;
        Ok(self.mean_inverse_unchecked(phi, kind))
    }

    /// Draws the LoS state, then `10 log10(Psi) ~ N(mu, sigma(phi)^2)`.
    pub fn sample_link_state<R: Rng + ?Sized>(&self, phi: f64, rng: &mut R) -> Result<LinkState> {
        check_model_angle(phi)?;
        Ok(self.sample_unchecked(phi, rng))
    }

    pub fn mu_db(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::Los => self.mu_los_db,
            LinkKind::Nlos => self.mu_nlos_db,
        }
    }

    #[inline]
    pub(crate) fn sigma_unchecked(&self, phi: f64, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::Los => self.a_los * (self.b_los * phi).exp(),
            LinkKind::Nlos => self.a_nlos * (self.b_nlos * phi).exp(),
        }
    }

    #[inline]
    pub(crate) fn p_los_unchecked(&self, phi: f64) -> f64 {
        let base = (ANGLE_CEILING - phi).max(0.0);
        (self.beta1 * base.powf(self.beta2)).clamp(0.0, 1.0)
    }

    #[inline]
    pub(crate) fn mean_inverse_unchecked(&self, phi: f64, kind: LinkKind) -> f64 {
        let sigma = self.sigma_unchecked(phi, kind);
        db_to_linear(-self.mu_db(kind) + DB_TO_NEPER * sigma * sigma / 2.0)
    }

    #[inline]
    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, phi: f64, rng: &mut R) -> LinkState {
        let kind = if rng.gen::<f64>() < self.p_los_unchecked(phi) {
            LinkKind::Los
        } else {
            LinkKind::Nlos
        };
        let z: f64 = rng.sample(StandardNormal);
        let psi_db = self.mu_db(kind) + self.sigma_unchecked(phi, kind) * z;
        LinkState {
            kind,
            psi_linear: db_to_linear(psi_db),
        }
    }
}

/// Named environments parsed from a plain-text parameter file.
///
/// The file holds one `[name]` block per environment with exactly the keys
/// in [`ENVIRONMENT_KEYS`], one `key = value` per line, `#` comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnvironmentSet {
    envs: BTreeMap<String, EnvironmentParams>,
}

impl EnvironmentSet {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_ENVIRONMENTS).expect("shipped environment file is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let mut envs = BTreeMap::new();
        for (name, block) in doc {
            let toml::Value::Table(block) = block else {
                return Err(Error::Parse(format!(
                    "top-level key `{name}` must be an environment block"
                )));
            };
            if let Some(unknown) = block
                .keys()
                .find(|k| !ENVIRONMENT_KEYS.contains(&k.as_str()))
            {
                return Err(Error::invalid(
                    format!("{name}.{unknown}"),
                    "unknown environment key",
                ));
            }
            let get = |key: &str| -> Result<f64> {
                match block.get(key) {
                    Some(toml::Value::Float(v)) => Ok(*v),
                    Some(toml::Value::Integer(v)) => Ok(*v as f64),
                    Some(other) => Err(Error::invalid(
                        format!("{name}.{key}"),
                        format!("expected a number, got {other}"),
                    )),
                    None => Err(Error::invalid(format!("{name}.{key}"), "missing")),
                }
            };
            let env = EnvironmentParams {
                name: name.clone(),
                a_los: get("a_los")?,
                b_los: get("b_los")?,
                a_nlos: get("a_nlos")?,
                b_nlos: get("b_nlos")?,
                mu_los_db: get("mu_los_db")?,
                mu_nlos_db: get("mu_nlos_db")?,
                beta1: get("beta1")?,
                beta2: get("beta2")?,
            };
            env.validate().map_err(|e| match e {
                Error::InvalidParameter { key, reason } => Error::InvalidParameter {
                    key: format!("{name}.{key}"),
                    reason,
                },
                other => other,
            })?;
            envs.insert(name, env);
        }
        Ok(EnvironmentSet { envs })
    }

    pub fn get(&self, name: &str) -> Option<&EnvironmentParams> {
        self.envs.get(name)
    }

    pub fn lookup(&self, name: &str) -> Result<&EnvironmentParams> {
        self.get(name).ok_or_else(|| {
            Error::invalid(
                "env",
                format!(
                    "unknown environment `{name}` (available: {})",
                    self.names().collect::<Vec<_>>().join(", ")
                ),
            )
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.envs.keys().map(String::as_str)
    }
}

/// `(4πf/c)^2`.
#[inline]
pub fn kf(f: f64) -> f64 {
    let k = 4.0 * PI * f / SPEED_OF_LIGHT;
    k * k
}

/// Free-space path loss `K_f h^2 / cos^2(phi)` (linear).
pub fn fspl(phi: f64, h: f64, f: f64) -> Result<f64> {
    if !(0.0..PI / 2.0).contains(&phi) {
        return Err(Error::angle("phi", phi, "[0, π/2)"));
    }
    if !(h > 0.0) {
        return Err(Error::angle("h", h, "(0, ∞)"));
    }
    if !(f > 0.0) {
        return Err(Error::angle("f", f, "(0, ∞)"));
    }
    Ok(fspl_unchecked(phi, h, f))
}

#[inline]
pub(crate) fn fspl_unchecked(phi: f64, h: f64, f: f64) -> f64 {
    let c = phi.cos();
    kf(f) * h * h / (c * c)
}

/// Received power `P_t / (L_f Psi)` in watts.
pub fn received_power(pt_linear: f64, phi: f64, h: f64, f: f64, psi_linear: f64) -> Result<f64> {
    if !(pt_linear > 0.0) {
        return Err(Error::invalid("pt", "transmit power must be positive"));
    }
    if !(psi_linear > 0.0) {
        return Err(Error::invalid("psi", "excess loss must be positive"));
    }
    Ok(pt_linear / (fspl(phi, h, f)? * psi_linear))
}

pub(crate) fn check_model_angle(phi: f64) -> Result<()> {
    if (0.0..=ANGLE_CEILING + ANGLE_SLACK).contains(&phi) {
        Ok(())
    } else {
        Err(Error::angle("phi", phi, "[0, 5π/12]"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::stats::Moments;
    use approx::assert_relative_eq;
    use proptest::{prop_assert, prop_assume, proptest};

    fn flat(a: f64, mu: f64) -> EnvironmentParams {
        EnvironmentParams {
            name: "flat".into(),
            a_los: a,
            b_los: 0.0,
            a_nlos: a,
            b_nlos: 0.0,
            mu_los_db: mu,
            mu_nlos_db: mu,
            beta1: 1.0,
            beta2: 0.0,
        }
    }

    #[test]
    fn fspl_unit_constant() {
        let f = SPEED_OF_LIGHT / (4.0 * PI);
        assert_relative_eq!(fspl(0.0, 1.0, f).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn fspl_against_textbook_db_formula() {
        let db = 10.0 * fspl(0.0, 100.0, 2e9).unwrap().log10();
        // 20 log10(d) + 20 log10(f) - 147.55 uses a rounded constant.
        let textbook = 20.0 * 100f64.log10() + 20.0 * 2e9f64.log10() - 147.55;
        assert!((db - 78.47).abs() < 5e-3, "{db}");
        assert!((db - textbook).abs() < 5e-3);
    }

    #[test]
    fn fspl_sixty_degrees_quadruples() {
        let base = fspl(0.0, 100.0, 2e9).unwrap();
        assert_relative_eq!(
            fspl(PI / 3.0, 100.0, 2e9).unwrap(),
            4.0 * base,
            max_relative = 1e-12
        );
    }

    #[test]
    fn fspl_rejects_horizon_and_bad_height() {
        assert!(matches!(
            fspl(PI / 2.0, 100.0, 2e9),
            Err(Error::Domain { .. })
        ));
        assert!(fspl(0.1, 0.0, 2e9).is_err());
        assert!(fspl(-0.1, 10.0, 2e9).is_err());
    }

    #[test]
    fn sigma_reference_values() {
        let env = EnvironmentParams::urban();
        assert_eq!(env.shadow_sigma(0.0, LinkKind::Los).unwrap(), env.a_los);
        assert_eq!(env.shadow_sigma(0.0, LinkKind::Nlos).unwrap(), env.a_nlos);
        let const_env = flat(3.0, 0.0);
        assert_eq!(const_env.shadow_sigma(1.1, LinkKind::Los).unwrap(), 3.0);
        let s = env.shadow_sigma(PI / 4.0, LinkKind::Los).unwrap();
        assert_relative_eq!(
            s,
            env.a_los * (env.b_los * PI / 4.0).exp(),
            max_relative = 1e-15
        );
        assert!(env
            .shadow_sigma(ANGLE_CEILING + 1e-6, LinkKind::Los)
            .is_err());
    }

    #[test]
    fn sigma_matches_sample_spread() {
        let env = EnvironmentParams::urban();
        let phi = PI / 4.0;
        let mut rng = substream(11, 0);
        let m: Moments = (0..200_000)
            .filter_map(|_| {
                let s = env.sample_link_state(phi, &mut rng).unwrap();
                s.is_los().then(|| 10.0 * s.psi_linear.log10())
            })
            .collect();
        let sigma = env.shadow_sigma(phi, LinkKind::Los).unwrap();
        assert!((m.variance().sqrt() / sigma - 1.0).abs() < 0.01);
        assert!((m.mean() - env.mu_los_db).abs() < 5.0 * m.std_error());
    }

    #[test]
    fn p_los_edge_cases() {
        let env = EnvironmentParams::urban();
        assert_eq!(env.p_los(ANGLE_CEILING).unwrap(), 0.0);
        assert_relative_eq!(
            env.p_los(0.0).unwrap(),
            env.beta1 * ANGLE_CEILING.powf(env.beta2),
            max_relative = 1e-15
        );
        let mut e = flat(1.0, 0.0);
        e.beta1 = 0.7;
        assert_eq!(e.p_los(0.4).unwrap(), 0.7);
        assert!(env.p_los(1.4).is_err());
    }

    #[test]
    fn p_los_is_clamped() {
        let mut env = EnvironmentParams::urban();
        env.beta1 *= 2.0;
        assert!(env.validate().is_err());
        assert_eq!(env.p_los(0.0).unwrap(), 1.0);
    }

    #[test]
    fn mean_inverse_degenerate_cases() {
        assert_relative_eq!(
            flat(1e-300, 0.0)
                .mean_inverse_shadowing(0.3, LinkKind::Los)
                .unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            flat(1e-300, 3.0)
                .mean_inverse_shadowing(0.3, LinkKind::Nlos)
                .unwrap(),
            0.501_187_233_627_272_3,
            max_relative = 1e-14
        );
    }

    #[test]
    fn mean_inverse_agrees_with_lognormal_draws() {
        let env = EnvironmentParams::urban();
        let phi = 0.3;
        for kind in [LinkKind::Los, LinkKind::Nlos] {
            let sigma = env.sigma_unchecked(phi, kind);
            let mut rng = substream(2024, kind as u64);
            let m: Moments = (0..1_000_000)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    1.0 / db_to_linear(env.mu_db(kind) + sigma * z)
                })
                .collect();
            let exact = env.mean_inverse_shadowing(phi, kind).unwrap();
            assert!(
                (m.mean() - exact).abs() < 3.0 * m.std_error(),
                "{kind:?}: {} vs {exact} ± {}",
                m.mean(),
                m.std_error()
            );
        }
    }

    #[test]
    fn link_state_sampling() {
        let env = EnvironmentParams::urban();
        let mut certain = env.clone();
        certain.beta1 = 1.0 / ANGLE_CEILING.powf(certain.beta2);
        let mut rng = substream(1, 1);
        assert!((0..10_000).all(|_| certain.sample_link_state(0.0, &mut rng).unwrap().is_los()));

        let a = env.sample_link_state(0.2, &mut substream(9, 9)).unwrap();
        let b = env.sample_link_state(0.2, &mut substream(9, 9)).unwrap();
        assert_eq!(a, b);

        let n = 1_000_000;
        let mut rng = substream(5, 0);
        let los = (0..n)
            .filter(|_| env.sample_link_state(0.2, &mut rng).unwrap().is_los())
            .count() as f64;
        let p = env.p_los(0.2).unwrap();
        assert!((los / n as f64 - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
        assert!(env.sample_link_state(2.0, &mut rng).is_err());
    }

    #[test]
    fn received_power_identities() {
        let f = SPEED_OF_LIGHT / (4.0 * PI);
        assert_eq!(received_power(0.25, 0.0, 1.0, f, 1.0).unwrap(), 0.25);
        let p1 = received_power(1.0, 0.4, 100.0, 2e9, 3.0).unwrap();
        let p2 = received_power(1.0, 0.4, 200.0, 2e9, 3.0).unwrap();
        assert_relative_eq!(p1 / p2, 4.0, max_relative = 1e-12);
        let composed = 0.251 / (fspl(0.4, 500.0, 2e9).unwrap() * 2.5);
        assert_relative_eq!(
            received_power(0.251, 0.4, 500.0, 2e9, 2.5).unwrap(),
            composed,
            max_relative = 1e-15
        );
    }

    #[test]
    fn builtin_set_has_all_environments() {
        let set = EnvironmentSet::builtin();
        let names: Vec<_> = set.names().collect();
        assert_eq!(
            names,
            ["dense-urban", "highrise-urban", "suburban", "urban"]
        );
        for n in names {
            set.get(n).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn parse_rejects_unknown_and_missing_keys() {
        let block = |extra: &str| {
            format!(
                "[x]\na_los = 1\nb_los = 0.1\na_nlos = 2\nb_nlos = 0.1\nmu_los_db = 1\nmu_nlos_db = 20\nbeta1 = 0.5\n{extra}"
            )
        };
        assert!(matches!(
            EnvironmentSet::parse(&block("")),
            Err(Error::InvalidParameter { key, .. }) if key == "x.beta2"
        ));
        assert!(matches!(
            EnvironmentSet::parse(&block("beta2 = 0.1\ngamma = 3")),
            Err(Error::InvalidParameter { key, .. }) if key == "x.gamma"
        ));
        let ok = EnvironmentSet::parse(&block("beta2 = 0.1")).unwrap();
        assert_eq!(ok.lookup("x").unwrap().beta2, 0.1);
        assert!(ok.lookup("y").is_err());
    }

    proptest! {
        #[test]
        fn p_los_strictly_decreasing(a in 0.0f64..ANGLE_CEILING, b in 0.0f64..ANGLE_CEILING) {
            let env = EnvironmentParams::urban();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            prop_assert!(env.p_los(lo).unwrap() > env.p_los(hi).unwrap());
            prop_assert!(env.shadow_sigma(lo, LinkKind::Nlos).unwrap() < env.shadow_sigma(hi, LinkKind::Nlos).unwrap());
        }

        #[test]
        fn fspl_db_matches_distance_form(phi in 0.0f64..1.5, h in 1.0f64..5000.0, f in 1e8f64..1e11) {
            let db = 10.0 * fspl(phi, h, f).unwrap().log10();
            let d = h / phi.cos();
            let direct = 20.0 * (4.0 * PI * f * d / SPEED_OF_LIGHT).log10();
            prop_assert!((db - direct).abs() <= 1e-10 * direct.abs());
        }

        #[test]
        fn received_power_round_trip(phi in 0.0f64..1.3, h in 1.0f64..5000.0, psi in 0.01f64..1e4) {
            let pt = 0.25;
            let pr = received_power(pt, phi, h, 2e9, psi).unwrap();
            let back = pr * fspl(phi, h, 2e9).unwrap() * psi;
            prop_assert!((back - pt).abs() <= 1e-14 * pt);
        }
    }
}
