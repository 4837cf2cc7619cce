//! Channel, detector and excess-noise bookkeeping.
//!
//! All variances are in shot-noise units (N₀ = 1). Bob's quadrature follows the
//! linear model `y = t·x + z` with `t = √(ηT)` and `Var(z) = σ² = 1 + υe + ηTε`.
//!
//! Bob-side excess noise `ε_b` is referred to Bob's input, so it enters `V_B`
//! without the `ηT` attenuation that the channel-input terms `ε_a`, `ε_l` see.
//! How it is accounted for is selected by [`NoiseMode`]:
//!
//! | mode          | channel ε                  | trusted detector noise |
//! |---------------|----------------------------|------------------------|
//! | `Ideal`       | `ε_a + ε_l + ε_b`          | `υe`                   |
//! | `Realistic`   | `ε_a + ε_l + ε_b / ηT`     | `υe`                   |
//! | `PureTrusted` | `ε_a + ε_l`                | `υe + ε_b`             |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shot-noise variance; every variance in the crate is normalised to it.
pub const SHOT_NOISE: f64 = 1.0;

/// Default fibre loss.
pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;

/// Transmittance of `distance_km` of fibre with the given loss.
pub fn distance_to_transmittance(distance_km: f64, attenuation_db_per_km: f64) -> Result<f64> {
    if !(distance_km >= 0.0) || !distance_km.is_finite() {
        return Err(Error::domain(format!(
            "distance must be a finite non-negative length, got {distance_km}"
        )));
    }
    check_attenuation(attenuation_db_per_km)?;
    Ok(10f64.powf(-attenuation_db_per_km * distance_km / 10.0))
}

/// Inverse of [`distance_to_transmittance`].
pub fn transmittance_to_distance(transmittance: f64, attenuation_db_per_km: f64) -> Result<f64> {
    check_transmittance(transmittance)?;
    check_attenuation(attenuation_db_per_km)?;
    Ok(-10.0 * transmittance.log10() / attenuation_db_per_km)
}

fn check_attenuation(attenuation_db_per_km: f64) -> Result<()> {
    if !(attenuation_db_per_km > 0.0) || !attenuation_db_per_km.is_finite() {
        return Err(Error::domain(format!(
            "attenuation must be positive, got {attenuation_db_per_km} dB/km"
        )));
    }
    Ok(())
}

fn check_transmittance(transmittance: f64) -> Result<()> {
    if !(transmittance > 0.0 && transmittance <= 1.0) {
        return Err(Error::domain(format!(
            "transmittance must lie in (0, 1], got {transmittance}"
        )));
    }
    Ok(())
}

/// The distance-independent part of a link: fibre loss and Bob's detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub attenuation_db_per_km: f64,
    /// Detector efficiency η.
    pub eta: f64,
    /// Electronic noise υe (SNU).
    pub nu_e: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            attenuation_db_per_km: DEFAULT_ATTENUATION_DB_PER_KM,
            eta: 0.6,
            nu_e: 0.1,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        check_attenuation(self.attenuation_db_per_km)?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::domain(format!(
                "detector efficiency must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if !(self.nu_e >= 0.0) || !self.nu_e.is_finite() {
            return Err(Error::domain(format!(
                "electronic noise must be non-negative, got {}",
                self.nu_e
            )));
        }
        Ok(())
    }

    pub fn at_distance(&self, distance_km: f64) -> Result<ChannelLink> {
        ChannelLink::at_distance(*self, distance_km)
    }

    pub fn at_transmittance(&self, transmittance: f64) -> Result<ChannelLink> {
        ChannelLink::from_transmittance(*self, transmittance)
    }
}

/// A fibre link of a given length terminated by Bob's detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelLink {
    pub distance_km: f64,
    pub attenuation_db_per_km: f64,
    /// Channel transmittance T.
    pub transmittance: f64,
    pub eta: f64,
    pub nu_e: f64,
}

impl ChannelLink {
    pub fn at_distance(params: LinkParams, distance_km: f64) -> Result<Self> {
        params.validate()?;
        let transmittance = distance_to_transmittance(distance_km, params.attenuation_db_per_km)?;
        Ok(ChannelLink {
            distance_km,
            attenuation_db_per_km: params.attenuation_db_per_km,
            transmittance,
            eta: params.eta,
            nu_e: params.nu_e,
        })
    }

    pub fn from_transmittance(params: LinkParams, transmittance: f64) -> Result<Self> {
        params.validate()?;
        let distance_km = transmittance_to_distance(transmittance, params.attenuation_db_per_km)?;
        Ok(ChannelLink {
            distance_km,
            attenuation_db_per_km: params.attenuation_db_per_km,
            transmittance,
            eta: params.eta,
            nu_e: params.nu_e,
        })
    }

    pub fn params(&self) -> LinkParams {
        LinkParams {
            attenuation_db_per_km: self.attenuation_db_per_km,
            eta: self.eta,
            nu_e: self.nu_e,
        }
    }

    /// ηT.
    pub fn overall_transmission(&self) -> f64 {
        self.eta * self.transmittance
    }

    /// t = √(ηT).
    pub fn amplitude_factor(&self) -> f64 {
        self.overall_transmission().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// ε_b attributed to the channel input as if it were attenuated (constant ε).
    Ideal,
    /// ε_b attributed to the channel input, inflated by 1/ηT.
    Realistic,
    /// ε_b calibrated and treated as trusted detector noise.
    PureTrusted,
}

impl NoiseMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseMode::Ideal => "ideal",
            NoiseMode::Realistic => "realistic",
            NoiseMode::PureTrusted => "pure-trusted",
        }
    }
}

impl std::fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ideal" => Ok(NoiseMode::Ideal),
            "realistic" => Ok(NoiseMode::Realistic),
            "pure-trusted" | "pure_trusted" | "pure" | "trusted" => Ok(NoiseMode::PureTrusted),
            other => Err(Error::domain(format!("unknown noise mode `{other}`"))),
        }
    }
}

/// Excess-noise contributions from Alice's setup, the line and Bob's setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub eps_a: f64,
    pub eps_l: f64,
    /// Referred to Bob's input, not attenuated by the channel.
    pub eps_b: f64,
    pub mode: NoiseMode,
}

impl NoiseBudget {
    /// A budget with a single constant excess noise in `Ideal` accounting.
    pub fn ideal(eps: f64) -> Self {
        NoiseBudget {
            eps_a: eps,
            eps_l: 0.0,
            eps_b: 0.0,
            mode: NoiseMode::Ideal,
        }
    }

    pub fn with_mode(mut self, mode: NoiseMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps_a", self.eps_a), ("eps_l", self.eps_l), ("eps_b", self.eps_b)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// ε_a + ε_l, the pure excess noise.
    pub fn pure(&self) -> f64 {
        self.eps_a + self.eps_l
    }
}

/// The pair handed to the information-theoretic layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveNoise {
    /// Excess noise attributed to the channel (Eve), referred to its input.
    pub epsilon: f64,
    /// Detector-side noise Eve cannot touch.
    pub trusted_noise: f64,
}

pub fn effective_excess_noise(budget: &NoiseBudget, link: &ChannelLink) -> Result<EffectiveNoise> {
    budget.validate()?;
    let pure = budget.pure();
    match budget.mode {
        NoiseMode::Ideal => Ok(EffectiveNoise {
            epsilon: pure + budget.eps_b,
            trusted_noise: link.nu_e,
        }),
        NoiseMode::Realistic => {
            let eta_t = link.overall_transmission();
            if !(eta_t > 0.0) {
                return Err(Error::Singularity(
                    "realistic excess noise diverges at ηT = 0".into(),
                ));
            }
            Ok(EffectiveNoise {
                epsilon: pure + budget.eps_b / eta_t,
                trusted_noise: link.nu_e,
            })
        }
        NoiseMode::PureTrusted => Ok(EffectiveNoise {
            epsilon: pure,
            trusted_noise: link.nu_e + budget.eps_b,
        }),
    }
}

/// Bob's post-detection variance with ε_b entering unattenuated.
pub fn assemble_vb(va: f64, link: &ChannelLink, budget: &NoiseBudget) -> f64 {
    let eta_t = link.overall_transmission();
    eta_t * va + eta_t * budget.pure() + budget.eps_b + SHOT_NOISE + link.nu_e
}

/// Bob's variance for a constant channel-input excess noise `eps`.
pub fn variance_from_excess_noise(va: f64, link: &ChannelLink, eps: f64) -> f64 {
    let eta_t = link.overall_transmission();
    eta_t * (va + eps) + SHOT_NOISE + link.nu_e
}

/// Channel-input excess noise implied by a measured `V_B`.
///
/// The result is not clamped: estimates below the noiseless floor come back
/// negative and are left for the security layer to handle.
pub fn invert_excess_noise(vb: f64, va: f64, link: &ChannelLink) -> Result<f64> {
    let eta_t = link.overall_transmission();
    if !(eta_t > 0.0) {
        return Err(Error::Singularity("cannot refer noise to the input at ηT = 0".into()));
    }
    let eps = (vb - eta_t * va - SHOT_NOISE - link.nu_e) / eta_t;
    if eps < 0.0 {
        log::warn!("estimated excess noise {eps:.3e} is below the noiseless floor");
    }
    Ok(eps)
}

/// `y = t·x + z` parameters seen by Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearChannelModel {
    pub t: f64,
    pub sigma2: f64,
}

impl LinearChannelModel {
    pub fn new(link: &ChannelLink, noise: &EffectiveNoise) -> Self {
        let t = link.amplitude_factor();
        LinearChannelModel {
            t,
            sigma2: SHOT_NOISE + noise.trusted_noise + t * t * noise.epsilon,
        }
    }

    pub fn from_budget(link: &ChannelLink, budget: &NoiseBudget) -> Result<Self> {
        Ok(Self::new(link, &effective_excess_noise(budget, link)?))
    }

    pub fn bob_variance(&self, va: f64) -> f64 {
        self.t * self.t * va + self.sigma2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn link(distance: f64) -> ChannelLink {
        LinkParams::default().at_distance(distance).unwrap()
    }

    /// Link whose ηT is exactly `eta_t` with η = 0.6.
    fn link_with_eta_t(eta_t: f64) -> ChannelLink {
        LinkParams::default().at_transmittance(eta_t / 0.6).unwrap()
    }

    #[test]
    fn zero_distance_is_lossless() {
        assert_eq!(distance_to_transmittance(0.0, 0.2).unwrap(), 1.0);
    }

    #[test]
    fn fifty_km_is_one_decade() {
        assert_relative_eq!(distance_to_transmittance(50.0, 0.2).unwrap(), 0.1, max_relative = 1e-15);
    }

    #[test]
    fn thirty_nine_km_gives_eta_t_of_a_tenth() {
        let l = link(39.0);
        assert!((l.transmittance - 0.16596).abs() < 5e-5);
        assert!((l.overall_transmission() - 0.1).abs() < 0.002);
    }

    #[test]
    fn negative_distance_rejected() {
        assert!(matches!(distance_to_transmittance(-1.0, 0.2), Err(Error::Domain(_))));
        assert!(distance_to_transmittance(1.0, 0.0).is_err());
        assert!(LinkParams { eta: 1.2, ..Default::default() }.validate().is_err());
        assert!(LinkParams { nu_e: -0.1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn realistic_noise_at_tenth_transmission() {
        let budget = NoiseBudget { eps_a: 0.005, eps_l: 0.0, eps_b: 5e-4, mode: NoiseMode::Realistic };
        let e = effective_excess_noise(&budget, &link_with_eta_t(0.1)).unwrap();
        assert_relative_eq!(e.epsilon, 0.01, max_relative = 1e-12);
        assert_eq!(e.trusted_noise, 0.1);
        let e = effective_excess_noise(&budget, &link_with_eta_t(0.05)).unwrap();
        assert_relative_eq!(e.epsilon, 0.015, max_relative = 1e-12);
    }

    #[test]
    fn realistic_without_bob_noise_is_flat() {
        let budget = NoiseBudget { eps_a: 0.003, eps_l: 0.002, eps_b: 0.0, mode: NoiseMode::Realistic };
        for d in [0.0, 10.0, 100.0, 300.0] {
            let e = effective_excess_noise(&budget, &link(d)).unwrap();
            assert_relative_eq!(e.epsilon, 0.005, max_relative = 1e-15);
        }
    }

    #[test]
    fn modes_split_noise_as_documented() {
        let l = link(39.0);
        let b = NoiseBudget { eps_a: 0.004, eps_l: 0.001, eps_b: 5e-4, mode: NoiseMode::Ideal };
        let ideal = effective_excess_noise(&b, &l).unwrap();
        assert_relative_eq!(ideal.epsilon, 0.0055, max_relative = 1e-15);
        let pure = effective_excess_noise(&b.with_mode(NoiseMode::PureTrusted), &l).unwrap();
        assert_relative_eq!(pure.epsilon, 0.005, max_relative = 1e-15);
        assert_relative_eq!(pure.trusted_noise, 0.1005, max_relative = 1e-15);
    }

    #[test]
    fn vb_examples() {
        let l = link_with_eta_t(0.1);
        let silent = LinkParams { nu_e: 0.0, ..Default::default() }.at_distance(10.0).unwrap();
        let zero = NoiseBudget::ideal(0.0);
        assert_eq!(assemble_vb(0.0, &silent, &zero), 1.0);

        let budget = NoiseBudget { eps_a: 0.005, eps_l: 0.0, eps_b: 5e-4, mode: NoiseMode::Realistic };
        let vb = assemble_vb(4.0, &l, &budget);
        assert_relative_eq!(vb, 1.501, max_relative = 1e-12);
        assert_relative_eq!(variance_from_excess_noise(4.0, &l, 0.01), vb, max_relative = 1e-12);
        assert_relative_eq!(invert_excess_noise(vb, 4.0, &l).unwrap(), 0.01, epsilon = 1e-10);
    }

    #[test]
    fn vb_without_bob_noise_matches_constant_noise_form() {
        let l = link(25.0);
        let b = NoiseBudget { eps_a: 0.02, eps_l: 0.01, eps_b: 0.0, mode: NoiseMode::Ideal };
        assert_eq!(assemble_vb(3.0, &l, &b), variance_from_excess_noise(3.0, &l, 0.03));
    }

    #[test]
    fn noiseless_inversion_and_negative_estimates() {
        let l = link(20.0);
        let floor = l.overall_transmission() * 5.0 + 1.0 + l.nu_e;
        assert!(invert_excess_noise(floor, 5.0, &l).unwrap().abs() < 1e-12);
        assert!(invert_excess_noise(floor - 0.01, 5.0, &l).unwrap() < 0.0);
    }

    #[test]
    fn linear_model_variance_matches_eq4() {
        let l = link(39.0);
        let b = NoiseBudget { eps_a: 0.004, eps_l: 0.001, eps_b: 5e-4, mode: NoiseMode::Realistic };
        let m = LinearChannelModel::from_budget(&l, &b).unwrap();
        assert_relative_eq!(m.bob_variance(4.0), assemble_vb(4.0, &l, &b), max_relative = 1e-12);
        assert!(m.sigma2 >= 1.0);
    }

    proptest! {
        #[test]
        fn assemble_and_invert_round_trip(
            va in 0.01f64..100.0,
            d in 0.0f64..300.0,
            eps_a in 0.0f64..0.1,
            eps_l in 0.0f64..0.05,
            eps_b in 0.0f64..0.01,
        ) {
            let l = link(d);
            let b = NoiseBudget { eps_a, eps_l, eps_b, mode: NoiseMode::Realistic };
            let vb = assemble_vb(va, &l, &b);
            let eps_r = effective_excess_noise(&b, &l).unwrap().epsilon;
            prop_assert!((vb / variance_from_excess_noise(va, &l, eps_r) - 1.0).abs() < 1e-12);
            let back = invert_excess_noise(vb, va, &l).unwrap();
            prop_assert!((back - eps_r).abs() < 1e-10 * eps_r.max(1.0));
        }

        #[test]
        fn realistic_noise_decreases_with_transmittance(
            t1 in 0.001f64..1.0, t2 in 0.001f64..1.0, eps_b in 1e-5f64..0.01,
        ) {
            prop_assume!((t1 - t2).abs() > 1e-6);
            let p = LinkParams::default();
            let b = NoiseBudget { eps_a: 0.005, eps_l: 0.0, eps_b, mode: NoiseMode::Realistic };
            let e1 = effective_excess_noise(&b, &p.at_transmittance(t1).unwrap()).unwrap().epsilon;
            let e2 = effective_excess_noise(&b, &p.at_transmittance(t2).unwrap()).unwrap().epsilon;
            prop_assert_eq!(t1 < t2, e1 > e2);
        }

        #[test]
        fn accounting_modes_share_bob_variance(
            va in 0.1f64..50.0, d in 0.0f64..200.0, eps_b in 0.0f64..0.01,
        ) {
            let l = link(d);
            let b = NoiseBudget { eps_a: 0.003, eps_l: 0.002, eps_b, mode: NoiseMode::Realistic };
            let r = LinearChannelModel::from_budget(&l, &b).unwrap();
            let p = LinearChannelModel::from_budget(&l, &b.with_mode(NoiseMode::PureTrusted)).unwrap();
            prop_assert!((r.bob_variance(va) / p.bob_variance(va) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn distance_round_trip(d in 0.0f64..1000.0, att in 0.05f64..1.0) {
            let t = distance_to_transmittance(d, att).unwrap();
            let back = transmittance_to_distance(t, att).unwrap();
            prop_assert!((back - d).abs() < 1e-9);
        }

        #[test]
        fn transmittance_strictly_decreasing(d in 0.0f64..500.0, step in 0.01f64..50.0) {
            prop_assert!(distance_to_transmittance(d + step, 0.2).unwrap()
                < distance_to_transmittance(d, 0.2).unwrap());
        }
    }
}
