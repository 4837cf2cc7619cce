//! Finite-size key rate with worst-case parameter estimation.
//!
//! The key rate per symbol is
//!
//! ```text
//! K = (n/N)·(β·I_AB − S(y:E, δ_PE) − Δ(n, δ)),   Δ(n, δ) = 7·√(log₂(2/δ)/n)
//! ```
//!
//! where `S(y:E, δ_PE)` is the Holevo bound at the least favourable corner of
//! the confidence region for the linear-model parameters `(t, σ²)`. Which end
//! of the `t` interval is least favourable depends on which side of the Holevo
//! maximum (at constant pure excess noise) the link operates: below `t_peak`
//! S grows with `t` and `t_max` must be used; above it, `t_min`. The "loose"
//! bound always takes `t_min`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::gaussian_info::{holevo_bound, holevo_from_t_sigma, mutual_information, ChannelState, ProtocolFamily, ProtocolSpec};
use crate::noise_model::{effective_excess_noise, ChannelLink, LinearChannelModel, LinkParams, NoiseBudget, SHOT_NOISE};
use crate::rate_engine::{rate_distance_curve, DistanceGrid, RateCurve, RateModel};

pub const DEFAULT_FAILURE_PROBABILITY: f64 = 1e-10;

/// Step for the central differences used to locate `t_peak`.
const PEAK_DIFF_STEP: f64 = 1e-6;
/// Final bracket width for `t_peak`.
const PEAK_TOL: f64 = 1e-8;
const PEAK_SCAN_POINTS: usize = 120;
const PEAK_SCAN_MIN_T: f64 = 1e-4;
/// Smallest amplitude factor a worst-case evaluation will use.
const MIN_AMPLITUDE: f64 = 1e-9;

/// Two-sided Gaussian quantile: `erfc(z/√2) = delta_pe`.
pub fn z_score_for(delta_pe: f64) -> Result<f64> {
    if !(delta_pe > 0.0 && delta_pe < 1.0) {
        return Err(Error::domain(format!("δ_PE must lie in (0, 1), got {delta_pe}")));
    }
    Ok(std::f64::consts::SQRT_2 * erfc_inv(delta_pe))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteSizeSetup {
    /// N = m + n.
    pub total: u64,
    /// Samples kept for key distillation.
    pub n: u64,
    /// Samples disclosed for parameter estimation.
    pub m: u64,
    pub delta_pe: f64,
    pub delta: f64,
    pub z_score: f64,
}

impl FiniteSizeSetup {
    /// `m = n = N/2` with δ_PE = δ = 10⁻¹⁰.
    pub fn symmetric(total: u64) -> Result<Self> {
        Self::new(total, total / 2, DEFAULT_FAILURE_PROBABILITY, DEFAULT_FAILURE_PROBABILITY)
    }

    pub fn new(total: u64, m: u64, delta_pe: f64, delta: f64) -> Result<Self> {
        if m < 1 || m >= total {
            return Err(Error::domain(format!(
                "need 1 ≤ m < N, got m = {m}, N = {total}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::domain(format!("δ must lie in (0, 1), got {delta}")));
        }
        Ok(FiniteSizeSetup {
            total,
            n: total - m,
            m,
            delta_pe,
            delta,
            z_score: z_score_for(delta_pe)?,
        })
    }

    pub fn key_fraction(&self) -> f64 {
        self.n as f64 / self.total as f64
    }
}

/// Δ(n, δ) = 7·√(log₂(2/δ)/n).
pub fn delta_correction(n: f64, delta: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::domain(format!("need n ≥ 1, got {n}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("δ must lie in (0, 1), got {delta}")));
    }
    Ok(7.0 * ((2.0 / delta).log2() / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub t_hat: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub sigma2_hat: f64,
    pub sigma2_min: f64,
    pub sigma2_max: f64,
    /// `t_min` would have crossed zero.
    pub t_clamped: bool,
}

/// Expected-case region around `(t, σ²)`:
/// `t ∓ z·√(σ²/(m·V_A))` and `σ² ∓ z·σ²·√2/√m`.
pub fn confidence_region(t: f64, sigma2: f64, m: f64, va: f64, z: f64) -> Result<ConfidenceRegion> {
    if !(m >= 2.0) {
        return Err(Error::domain(format!("need m ≥ 2 estimation samples, got {m}")));
    }
    if !(va > 0.0) {
        return Err(Error::domain(format!("modulation variance must be positive, got {va}")));
    }
    if !(z >= 0.0) {
        return Err(Error::domain(format!("z-score must be non-negative, got {z}")));
    }
    let t_half = z * (sigma2 / (m * va)).sqrt();
    let s_half = z * sigma2 * std::f64::consts::SQRT_2 / m.sqrt();
    let raw_min = t - t_half;
    Ok(ConfidenceRegion {
        t_hat: t,
        t_min: raw_min.max(0.0),
        t_max: t + t_half,
        sigma2_hat: sigma2,
        sigma2_min: sigma2 - s_half,
        sigma2_max: sigma2 + s_half,
        t_clamped: raw_min <= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakInfo {
    pub transmittance: f64,
    /// √(η·T_peak): the peak in the amplitude-factor coordinate.
    pub t_peak: f64,
    /// The constant excess noise the curve was traced at.
    pub epsilon: f64,
    pub va: f64,
    pub s_ye: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PeakSearch {
    Interior(PeakInfo),
    /// No sign change of ∂S/∂t; S is monotone over `T ∈ (0, 1]`.
    Monotone { increasing: bool },
}

impl PeakSearch {
    pub fn interior(&self) -> Option<&PeakInfo> {
        match self {
            PeakSearch::Interior(p) => Some(p),
            PeakSearch::Monotone { .. } => None,
        }
    }

    /// Is S(y:E) increasing in t at amplitude factor `t`?
    pub fn rising_at(&self, t: f64) -> bool {
        match self {
            PeakSearch::Interior(p) => t < p.t_peak,
            PeakSearch::Monotone { increasing } => *increasing,
        }
    }
}

/// Locate the maximum of S(y:E) versus T at constant excess noise.
///
/// A log-spaced scan brackets the maximum; the bracket is then refined by
/// bisection on the sign of a central-difference derivative in `t`.
pub fn find_t_peak(
    family: ProtocolFamily,
    va: f64,
    eta: f64,
    trusted_noise: f64,
    epsilon: f64,
) -> Result<PeakSearch> {
    if !(epsilon >= 0.0) {
        return Err(Error::domain(format!("excess noise must be non-negative, got {epsilon}")));
    }
    let holevo_at = |t: f64| -> Result<f64> {
        let state = ChannelState {
            transmittance: (t * t / eta).min(1.0),
            eta,
            trusted_noise,
            epsilon,
        };
        Ok(holevo_bound(family, va, &state)?.s_ye)
    };
    let t_hi = (eta * (1.0 - 10.0 * PEAK_DIFF_STEP)).sqrt() - PEAK_DIFF_STEP;
    let u_lo = (eta * PEAK_SCAN_MIN_T).sqrt().ln();
    let u_hi = t_hi.ln();
    let ts: Vec<f64> = (0..PEAK_SCAN_POINTS)
        .map(|k| (u_lo + (u_hi - u_lo) * k as f64 / (PEAK_SCAN_POINTS - 1) as f64).exp())
        .collect();
    let values = ts.iter().map(|&t| holevo_at(t)).collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
    if best == 0 {
        return Ok(PeakSearch::Monotone { increasing: false });
    }
    if best + 1 == ts.len() {
        return Ok(PeakSearch::Monotone { increasing: true });
    }
    let slope = |t: f64| -> Result<f64> {
        Ok((holevo_at(t + PEAK_DIFF_STEP)? - holevo_at(t - PEAK_DIFF_STEP)?) / (2.0 * PEAK_DIFF_STEP))
    };
    let (mut lo, mut hi) = (ts[best - 1], ts[best + 1]);
    if slope(lo)? > 0.0 && slope(hi)? < 0.0 {
        while hi - lo > PEAK_TOL {
            let mid = 0.5 * (lo + hi);
            if slope(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    } else {
        lo = ts[best];
        hi = ts[best];
    }
    let t_peak = 0.5 * (lo + hi);
    Ok(PeakSearch::Interior(PeakInfo {
        transmittance: t_peak * t_peak / eta,
        t_peak,
        epsilon,
        va,
        s_ye: holevo_at(t_peak)?,
    }))
}

/// Which corner of the confidence region feeds the Holevo bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolevoBranch {
    /// `t_max` below the peak, `t_min` above it.
    Tight,
    /// Always `t_min`.
    Loose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub s_ye: f64,
    pub t_used: f64,
    pub sigma2_used: f64,
    pub eps_clamped: bool,
}

/// S(y:E, δ_PE): the Holevo bound at the selected `t` endpoint and `σ²_max`.
pub fn worst_case_holevo(
    family: ProtocolFamily,
    va: f64,
    eta: f64,
    trusted_noise: f64,
    region: &ConfidenceRegion,
    peak: &PeakSearch,
    branch: HolevoBranch,
) -> Result<WorstCase> {
    let use_max = match branch {
        HolevoBranch::Tight => peak.rising_at(region.t_hat),
        HolevoBranch::Loose => false,
    };
    let t_used = if use_max {
        region.t_max.min(eta.sqrt())
    } else {
        region.t_min.max(MIN_AMPLITUDE)
    };
    let r = holevo_from_t_sigma(family, va, t_used, region.sigma2_max, eta, trusted_noise)?;
    if r.eps_clamped {
        log::warn!("worst-case σ² below the noiseless floor; excess noise clamped to zero");
    }
    Ok(WorstCase {
        s_ye: r.s_ye,
        t_used,
        sigma2_used: region.sigma2_max,
        eps_clamped: r.eps_clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiniteVariant {
    Tight,
    Loose,
    /// Estimates landed on `(t_min, σ²_max)`: lower edge of the achievable band.
    LMin,
    /// Estimates landed on `(t_max, σ²_min)`: upper edge of the band.
    LMax,
}

impl FiniteVariant {
    pub const ALL: [FiniteVariant; 4] = [
        FiniteVariant::Tight,
        FiniteVariant::Loose,
        FiniteVariant::LMin,
        FiniteVariant::LMax,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FiniteVariant::Tight => "tight",
            FiniteVariant::Loose => "loose",
            FiniteVariant::LMin => "lmin",
            FiniteVariant::LMax => "lmax",
        }
    }
}

impl std::fmt::Display for FiniteVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FiniteVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tight" => Ok(FiniteVariant::Tight),
            "loose" => Ok(FiniteVariant::Loose),
            "lmin" | "l-min" | "l_min" => Ok(FiniteVariant::LMin),
            "lmax" | "l-max" | "l_max" => Ok(FiniteVariant::LMax),
            other => Err(Error::domain(format!("unknown finite-size variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteRate {
    pub key_rate: f64,
    pub i_ab: f64,
    /// S(y:E, δ_PE).
    pub s_pe: f64,
    pub delta_term: f64,
    pub region: ConfidenceRegion,
    pub peak: PeakSearch,
    pub worst: WorstCase,
}

#[allow(clippy::too_many_arguments)]
/// Tight finite-size rate for estimates `(t̂, σ̂²)`, with I_AB taken at the
/// physical parameters those estimates imply.
fn rate_from_estimates(
    spec: &ProtocolSpec,
    va: f64,
    eta: f64,
    trusted_noise: f64,
    t_hat: f64,
    sigma2_hat: f64,
    setup: &FiniteSizeSetup,
    branch: HolevoBranch,
) -> Result<FiniteRate> {
    let t_hat = t_hat.clamp(MIN_AMPLITUDE, eta.sqrt());
    let epsilon = ((sigma2_hat - SHOT_NOISE - trusted_noise) / (t_hat * t_hat)).max(0.0);
    let state = ChannelState {
        transmittance: (t_hat * t_hat / eta).min(1.0),
        eta,
        trusted_noise,
        epsilon,
    };
    let i_ab = mutual_information(spec.family, va, &state)?;
    let region = confidence_region(t_hat, sigma2_hat, setup.m as f64, va, setup.z_score)?;
    let peak = match branch {
        HolevoBranch::Tight => find_t_peak(spec.family, va, eta, trusted_noise, epsilon)?,
        HolevoBranch::Loose => PeakSearch::Monotone { increasing: false },
    };
    let worst = worst_case_holevo(spec.family, va, eta, trusted_noise, &region, &peak, branch)?;
    let delta_term = delta_correction(setup.n as f64, setup.delta)?;
    let key_rate = setup.key_fraction() * (spec.beta * i_ab - worst.s_ye - delta_term);
    Ok(FiniteRate {
        key_rate,
        i_ab,
        s_pe: worst.s_ye,
        delta_term,
        region,
        peak,
        worst,
    })
}

/// Finite-size key rate at modulation variance `va`, evaluated in the expected
/// case (estimators centred on the true parameters).
pub fn finite_key_rate(
    spec: &ProtocolSpec,
    va: f64,
    link: &ChannelLink,
    budget: &NoiseBudget,
    setup: &FiniteSizeSetup,
    variant: FiniteVariant,
) -> Result<FiniteRate> {
    spec.validate()?;
    let noise = effective_excess_noise(budget, link)?;
    let model = LinearChannelModel::new(link, &noise);
    let trusted = noise.trusted_noise;
    match variant {
        FiniteVariant::Tight | FiniteVariant::Loose => {
            let branch = if variant == FiniteVariant::Tight {
                HolevoBranch::Tight
            } else {
                HolevoBranch::Loose
            };
            rate_from_estimates(spec, va, link.eta, trusted, model.t, model.sigma2, setup, branch)
        }
        FiniteVariant::LMin | FiniteVariant::LMax => {
            let expected = confidence_region(model.t, model.sigma2, setup.m as f64, va, setup.z_score)?;
            let (t_hat, sigma2_hat) = if variant == FiniteVariant::LMin {
                (expected.t_min, expected.sigma2_max)
            } else {
                (expected.t_max, expected.sigma2_min)
            };
            rate_from_estimates(spec, va, link.eta, trusted, t_hat, sigma2_hat, setup, HolevoBranch::Tight)
        }
    }
}

/// Finite-size rate–distance curve; V_A is re-optimised for the selected
/// variant at every grid point.
pub fn finite_rate_distance_curve(
    spec: &ProtocolSpec,
    budget: &NoiseBudget,
    params: &LinkParams,
    setup: &FiniteSizeSetup,
    variant: FiniteVariant,
    grid: &DistanceGrid,
    bracket: (f64, f64),
) -> Result<RateCurve> {
    let model = RateModel::Finite { setup: *setup, variant };
    rate_distance_curve(spec, budget, params, &model, grid, bracket)
}
