//! Key rates at optimised modulation variance, rate–distance curves and
//! maximum transmission distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_size::{finite_key_rate, FiniteSizeSetup, FiniteVariant};
use crate::gaussian_info::{holevo_bound, ChannelState, ProtocolFamily, ProtocolSpec};
use crate::noise_model::{assemble_vb, effective_excess_noise, ChannelLink, LinkParams, NoiseBudget, NoiseMode};
use crate::optimize::{bisect_last_true, maximize_log};

pub const DEFAULT_VA_BRACKET: (f64, f64) = (0.01, 100.0);

/// Relative accuracy of the optimised V_A.
pub const VA_REL_TOL: f64 = 1e-5;

/// Key rate (bits/symbol) below which a curve is considered to have ended.
///
/// With a constant channel-input excess noise the optimised asymptotic rate
/// decays like `T` and only changes sign thousands of kilometres out, far past
/// where double precision can resolve it; rate–distance limits are therefore
/// read where the rate falls through this floor. Set it to zero for the strict
/// sign change.
pub const DEFAULT_RATE_FLOOR: f64 = 1e-10;

pub const DEFAULT_MAX_SEARCH_KM: f64 = 600.0;
pub const DISTANCE_RESOLUTION_KM: f64 = 0.1;

/// Asymptotic rate or one of the finite-size evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateModel {
    Asymptotic,
    Finite {
        setup: FiniteSizeSetup,
        variant: FiniteVariant,
    },
}

impl RateModel {
    pub fn label(&self) -> &'static str {
        match self {
            RateModel::Asymptotic => "asymptotic",
            RateModel::Finite { variant, .. } => variant.as_str(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEvaluation {
    pub i_ab: f64,
    /// S(y:E), or S(y:E, δ_PE) for finite-size models.
    pub s_ye: f64,
    pub key_rate: f64,
}

/// β·I_AB − S(y:E) with the budget's noise accounting.
pub fn asymptotic_key_rate(
    spec: &ProtocolSpec,
    va: f64,
    link: &ChannelLink,
    budget: &NoiseBudget,
) -> Result<RateEvaluation> {
    spec.validate()?;
    let noise = effective_excess_noise(budget, link)?;
    let info = holevo_bound(spec.family, va, &ChannelState::new(link, &noise))?;
    Ok(RateEvaluation {
        i_ab: info.i_ab,
        s_ye: info.s_ye,
        key_rate: info.key_rate(spec.beta),
    })
}

pub fn evaluate(
    spec: &ProtocolSpec,
    va: f64,
    link: &ChannelLink,
    budget: &NoiseBudget,
    model: &RateModel,
) -> Result<RateEvaluation> {
    match model {
        RateModel::Asymptotic => asymptotic_key_rate(spec, va, link, budget),
        RateModel::Finite { setup, variant } => {
            let fr = finite_key_rate(spec, va, link, budget, setup, *variant)?;
            Ok(RateEvaluation {
                i_ab: fr.i_ab,
                s_ye: fr.s_pe,
                key_rate: fr.key_rate,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumVa {
    pub va: f64,
    pub evaluation: RateEvaluation,
    /// The objective was not unimodal and a dense grid was used.
    pub fell_back: bool,
}

fn check_bracket(bracket: (f64, f64)) -> Result<()> {
    if !(bracket.0 > 0.0 && bracket.1 > bracket.0) {
        return Err(Error::domain(format!(
            "V_A bracket must satisfy 0 < lo < hi, got [{}, {}]",
            bracket.0, bracket.1
        )));
    }
    Ok(())
}

/// Modulation variance maximising the model's key rate on `bracket`.
pub fn optimize_va(
    spec: &ProtocolSpec,
    link: &ChannelLink,
    budget: &NoiseBudget,
    model: &RateModel,
    bracket: (f64, f64),
) -> Result<OptimumVa> {
    check_bracket(bracket)?;
    let m = maximize_log(
        |va| Ok(evaluate(spec, va, link, budget, model)?.key_rate),
        bracket.0,
        bracket.1,
        VA_REL_TOL,
    )?;
    Ok(OptimumVa {
        va: m.x,
        evaluation: evaluate(spec, m.x, link, budget, model)?,
        fell_back: m.fell_back,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub distance_km: f64,
    pub transmittance: f64,
    pub va_opt: f64,
    /// Bob's variance at the optimum.
    pub vb: f64,
    pub i_ab: f64,
    pub s_ye: f64,
    pub key_rate: f64,
    pub mode: NoiseMode,
    pub variant: String,
    /// key_rate > 0.
    pub positive: bool,
}

pub fn rate_point(
    spec: &ProtocolSpec,
    link: &ChannelLink,
    budget: &NoiseBudget,
    model: &RateModel,
    bracket: (f64, f64),
) -> Result<RatePoint> {
    let opt = optimize_va(spec, link, budget, model, bracket)?;
    Ok(RatePoint {
        distance_km: link.distance_km,
        transmittance: link.transmittance,
        va_opt: opt.va,
        vb: assemble_vb(opt.va, link, budget),
        i_ab: opt.evaluation.i_ab,
        s_ye: opt.evaluation.s_ye,
        key_rate: opt.evaluation.key_rate,
        mode: budget.mode,
        variant: model.label().to_string(),
        positive: opt.evaluation.key_rate > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistanceGrid {
    Log { start_km: f64, stop_km: f64, points: usize },
    Linear { start_km: f64, stop_km: f64, points: usize },
    List { distances_km: Vec<f64> },
}

impl Default for DistanceGrid {
    /// 241 log-spaced points from 1 to 600 km.
    fn default() -> Self {
        DistanceGrid::Log {
            start_km: 1.0,
            stop_km: 600.0,
            points: 241,
        }
    }
}

impl DistanceGrid {
    pub fn distances(&self) -> Result<Vec<f64>> {
        let d = match self {
            DistanceGrid::Log { start_km, stop_km, points } => {
                if !(*start_km > 0.0) {
                    return Err(Error::domain("log grid must start above 0 km"));
                }
                spaced(*start_km, *stop_km, *points, true)
            }
            DistanceGrid::Linear { start_km, stop_km, points } => spaced(*start_km, *stop_km, *points, false),
            DistanceGrid::List { distances_km } => distances_km.clone(),
        };
        if d.is_empty() {
            return Err(Error::domain("distance grid is empty"));
        }
        if d.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::domain("distances must be finite and non-negative"));
        }
        if d.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("distance grid must be strictly increasing"));
        }
        Ok(d)
    }
}

fn spaced(start: f64, stop: f64, points: usize, log: bool) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|k| {
                let f = k as f64 / (points - 1) as f64;
                if k + 1 == points {
                    stop
                } else if log {
                    (start.ln() + f * (stop.ln() - start.ln())).exp()
                } else {
                    start + f * (stop - start)
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub beta: f64,
    pub eta: f64,
    pub nu_e: f64,
    pub attenuation_db_per_km: f64,
    pub grid: DistanceGrid,
    pub va_bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub points: Vec<RatePoint>,
    pub protocol: ProtocolSpec,
    pub budget: NoiseBudget,
    pub model: RateModel,
    pub meta: CurveMeta,
}

impl RateCurve {
    /// Last grid distance with a positive rate.
    pub fn last_positive_km(&self) -> Option<f64> {
        self.points.iter().rfind(|p| p.positive).map(|p| p.distance_km)
    }
}

/// Optimised rate at every grid distance. Grid points are evaluated in
/// parallel; the result is identical to a sequential sweep.
pub fn rate_distance_curve(
    spec: &ProtocolSpec,
    budget: &NoiseBudget,
    params: &LinkParams,
    model: &RateModel,
    grid: &DistanceGrid,
    bracket: (f64, f64),
) -> Result<RateCurve> {
    spec.validate()?;
    params.validate()?;
    budget.validate()?;
    check_bracket(bracket)?;
    let distances = grid.distances()?;
    let points = distances
        .par_iter()
        .map(|&d| rate_point(spec, &params.at_distance(d)?, budget, model, bracket))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateCurve {
        points,
        protocol: *spec,
        budget: *budget,
        model: *model,
        meta: CurveMeta {
            beta: spec.beta,
            eta: params.eta,
            nu_e: params.nu_e,
            attenuation_db_per_km: params.attenuation_db_per_km,
            grid: grid.clone(),
            va_bracket: bracket,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxDistanceOptions {
    pub floor: f64,
    pub max_km: f64,
    pub resolution_km: f64,
    pub va_bracket: (f64, f64),
    /// Evenly spaced probes over `[0, max_km]` before bisection.
    pub probes: usize,
}

impl Default for MaxDistanceOptions {
    fn default() -> Self {
        MaxDistanceOptions {
            floor: DEFAULT_RATE_FLOOR,
            max_km: DEFAULT_MAX_SEARCH_KM,
            resolution_km: DISTANCE_RESOLUTION_KM,
            va_bracket: DEFAULT_VA_BRACKET,
            probes: 61,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MaxDistance {
    /// Largest distance with rate above the floor.
    Reached { km: f64 },
    /// The rate never exceeds the floor.
    NoDistance,
    /// Still above the floor at the end of the search range.
    BeyondRange { searched_km: f64 },
}

impl MaxDistance {
    pub fn km(&self) -> Option<f64> {
        match self {
            MaxDistance::Reached { km } => Some(*km),
            _ => None,
        }
    }
}

fn optimized_rate_at(
    spec: &ProtocolSpec,
    budget: &NoiseBudget,
    params: &LinkParams,
    model: &RateModel,
    bracket: (f64, f64),
    d: f64,
) -> Result<f64> {
    Ok(optimize_va(spec, &params.at_distance(d)?, budget, model, bracket)?.evaluation.key_rate)
}

pub fn max_distance(
    spec: &ProtocolSpec,
    budget: &NoiseBudget,
    params: &LinkParams,
    model: &RateModel,
    opts: &MaxDistanceOptions,
) -> Result<MaxDistance> {
    spec.validate()?;
    params.validate()?;
    check_bracket(opts.va_bracket)?;
    if !(opts.max_km > 0.0) || opts.probes < 2 || !(opts.resolution_km > 0.0) {
        return Err(Error::domain("max-distance search needs max_km > 0, ≥ 2 probes and a positive resolution"));
    }
    let probes = spaced(0.0, opts.max_km, opts.probes, false);
    let above = probes
        .par_iter()
        .map(|&d| Ok(optimized_rate_at(spec, budget, params, model, opts.va_bracket, d)? > opts.floor))
        .collect::<Result<Vec<bool>>>()?;
    let Some(last) = above.iter().rposition(|&a| a) else {
        return Ok(MaxDistance::NoDistance);
    };
    if last + 1 == probes.len() {
        return Ok(MaxDistance::BeyondRange {
            searched_km: opts.max_km,
        });
    }
    let km = bisect_last_true(
        |d| Ok(optimized_rate_at(spec, budget, params, model, opts.va_bracket, d)? > opts.floor),
        probes[last],
        probes[last + 1],
        0.5 * opts.resolution_km,
    )?;
    Ok(MaxDistance::Reached { km })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaImprovementRow {
    pub eps: f64,
    pub beta_low: f64,
    pub beta_high: f64,
    pub max_low: MaxDistance,
    pub max_high: MaxDistance,
    /// max_high − max_low when both limits were reached.
    pub delta_km: Option<f64>,
}

/// How much the asymptotic limit moves when β goes from `betas.0` to
/// `betas.1`, for each constant (ideal-accounting) excess noise.
pub fn beta_improvement_sweep(
    family: ProtocolFamily,
    eps_values: &[f64],
    betas: (f64, f64),
    params: &LinkParams,
    opts: &MaxDistanceOptions,
) -> Result<Vec<BetaImprovementRow>> {
    if eps_values.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::domain("excess-noise values must be positive"));
    }
    if eps_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("excess-noise values must be ascending"));
    }
    let low = ProtocolSpec::new(family, betas.0)?;
    let high = ProtocolSpec::new(family, betas.1)?;
    eps_values
        .iter()
        .map(|&eps| {
            let budget = NoiseBudget::ideal(eps);
            let max_low = max_distance(&low, &budget, params, &RateModel::Asymptotic, opts)?;
            let max_high = if betas.0 == betas.1 {
                max_low
            } else {
                max_distance(&high, &budget, params, &RateModel::Asymptotic, opts)?
            };
            let delta_km = match (max_low.km(), max_high.km()) {
                (Some(a), Some(b)) => Some(b - a),
                _ => None,
            };
            Ok(BetaImprovementRow {
                eps,
                beta_low: betas.0,
                beta_high: betas.1,
                max_low,
                max_high,
                delta_km,
            })
        })
        .collect()
}
