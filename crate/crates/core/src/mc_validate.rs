//! Monte Carlo simulation of `y = t·x + z` and the estimators behind the
//! finite-size analysis.
//!
//! Every experiment is seeded. Independent trials draw from separate ChaCha
//! streams of the same seed, so results do not depend on how rayon schedules
//! them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_size::{confidence_region, z_score_for};
use crate::noise_model::{invert_excess_noise, ChannelLink, LinearChannelModel, LinkParams, NoiseBudget, NoiseMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub samples: usize,
    pub t: f64,
    pub sigma2: f64,
    /// Alice's modulation variance.
    pub va: f64,
}

impl SimConfig {
    /// Linear-model parameters implied by a physical link and noise budget.
    pub fn from_physical(link: &ChannelLink, budget: &NoiseBudget, va: f64, seed: u64, samples: usize) -> Result<Self> {
        let model = LinearChannelModel::from_budget(link, budget)?;
        let cfg = SimConfig {
            seed,
            samples,
            t: model.t,
            sigma2: model.sigma2,
            va,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::domain(format!("need at least 2 samples, got {}", self.samples)));
        }
        if !(self.t >= 0.0) || !(self.sigma2 >= 0.0) || !(self.va > 0.0) {
            return Err(Error::domain("simulation needs t ≥ 0, σ² ≥ 0 and V_A > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn simulate_stream(cfg: &SimConfig, stream: u64) -> Dataset {
    let mut rng = rng_for(cfg.seed, stream);
    let (sx, sz) = (cfg.va.sqrt(), cfg.sigma2.sqrt());
    let mut x = Vec::with_capacity(cfg.samples);
    let mut y = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let xi: f64 = sx * Distribution::<f64>::sample(&StandardNormal, &mut rng);
        let zi: f64 = sz * Distribution::<f64>::sample(&StandardNormal, &mut rng);
        x.push(xi);
        y.push(cfg.t * xi + zi);
    }
    Dataset { x, y }
}

/// Draw `x ~ N(0, V_A)`, `z ~ N(0, σ²)` and return `(x, t·x + z)` pairs.
pub fn simulate_channel(cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    Ok(simulate_stream(cfg, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub t_hat: f64,
    pub sigma2_hat: f64,
    pub m_used: usize,
    pub va: f64,
}

impl EstimationResult {
    /// Channel-input excess noise implied by the estimates, through the
    /// variance inversion with `ηT̂ = t̂²`.
    pub fn excess_noise(&self, params: &LinkParams) -> Result<f64> {
        let t2 = self.t_hat * self.t_hat;
        let link = params.at_transmittance((t2 / params.eta).min(1.0))?;
        let vb = t2 * self.va + self.sigma2_hat;
        // Undo the clamp at T = 1 so the inversion sees the estimated ηT.
        let link = ChannelLink {
            transmittance: t2 / params.eta,
            ..link
        };
        invert_excess_noise(vb, self.va, &link)
    }
}

/// Least-squares slope `t̂ = Σxy/Σx²` and residual variance
/// `σ̂² = (1/m)·Σ(y − t̂x)²`.
pub fn estimate_parameters(data: &Dataset, va_known: f64) -> Result<EstimationResult> {
    if data.len() < 2 || data.x.len() != data.y.len() {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 paired samples, got {}",
            data.len()
        )));
    }
    let sxx: f64 = data.x.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("Σx² = 0: modulation carries no signal".into()));
    }
    let sxy: f64 = data.x.iter().zip(&data.y).map(|(x, y)| x * y).sum();
    let t_hat = sxy / sxx;
    let m = data.len();
    let sigma2_hat = data
        .x
        .iter()
        .zip(&data.y)
        .map(|(x, y)| {
            let r = y - t_hat * x;
            r * r
        })
        .sum::<f64>()
        / m as f64;
    Ok(EstimationResult {
        t_hat,
        sigma2_hat,
        m_used: m,
        va: va_known,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// 1 − δ_PE.
    pub nominal: f64,
    pub empirical: f64,
    pub trials: usize,
    pub covered: usize,
    /// Per-parameter quantile used for the joint region.
    pub z_score: f64,
    pub t_coverage: f64,
    pub sigma2_coverage: f64,
    /// Wilson 95 % interval around the empirical coverage.
    pub ci_low: f64,
    pub ci_high: f64,
    /// nominal ± 5 binomial standard deviations.
    pub band_low: f64,
    pub band_high: f64,
}

impl CoverageReport {
    pub fn within_band(&self) -> bool {
        self.empirical >= self.band_low && self.empirical <= self.band_high
    }
}

/// Per-parameter quantile making the `(t, σ²)` rectangle a joint
/// `1 − δ_PE` region: each side gets level `1 − √(1 − δ_PE)`. The two
/// estimators are independent for Gaussian data.
pub fn joint_z_score(delta_pe: f64) -> Result<f64> {
    if !(delta_pe > 0.0 && delta_pe < 1.0) {
        return Err(Error::domain(format!("δ_PE must lie in (0, 1), got {delta_pe}")));
    }
    z_score_for(1.0 - (1.0 - delta_pe).sqrt())
}

/// Fraction of trials whose confidence region (built around that trial's
/// estimates) contains the true `(t, σ²)`.
pub fn coverage_experiment(cfg: &SimConfig, delta_pe: f64, trials: usize) -> Result<CoverageReport> {
    let z = joint_z_score(delta_pe)?;
    coverage_with_z(cfg, z, 1.0 - delta_pe, trials)
}

/// Coverage for an explicit per-parameter quantile.
pub fn coverage_with_z(cfg: &SimConfig, z: f64, nominal: f64, trials: usize) -> Result<CoverageReport> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::domain("coverage needs at least one trial"));
    }
    if trials < 100 {
        log::warn!("only {trials} coverage trials; the estimate will be coarse");
    }
    let hits = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let data = simulate_stream(cfg, k);
            let est = estimate_parameters(&data, cfg.va)?;
            let r = confidence_region(est.t_hat, est.sigma2_hat, est.m_used as f64, cfg.va, z)?;
            let t_in = r.t_min <= cfg.t && cfg.t <= r.t_max;
            let s_in = r.sigma2_min <= cfg.sigma2 && cfg.sigma2 <= r.sigma2_max;
            Ok((t_in, s_in))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let covered = hits.iter().filter(|(a, b)| *a && *b).count();
    let t_cov = hits.iter().filter(|(a, _)| *a).count() as f64 / n;
    let s_cov = hits.iter().filter(|(_, b)| *b).count() as f64 / n;
    let p = covered as f64 / n;
    let (ci_low, ci_high) = wilson_interval(p, n, 1.96);
    let sd = (nominal * (1.0 - nominal) / n).sqrt();
    Ok(CoverageReport {
        nominal,
        empirical: p,
        trials,
        covered,
        z_score: z,
        t_coverage: t_cov,
        sigma2_coverage: s_cov,
        ci_low,
        ci_high,
        band_low: (nominal - 5.0 * sd).max(0.0),
        band_high: (nominal + 5.0 * sd).min(1.0),
    })
}

fn wilson_interval(p: f64, n: f64, z: f64) -> (f64, f64) {
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawPoint {
    pub distance_km: f64,
    pub eta_t: f64,
    /// ε̂ referred to the channel input, Bob-side noise included.
    pub eps_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BobNoiseLawFit {
    /// Fitted constant part, ε_a + ε_l.
    pub intercept: f64,
    /// Fitted coefficient of 1/(ηT), i.e. ε_b.
    pub slope: f64,
    pub points: Vec<LawPoint>,
}

/// Simulate the realistic link at each distance, estimate the excess noise
/// from the data and fit `ε̂ = a + b/(ηT)`.
///
/// The fit is weighted by (ηT)², which makes the residuals homoscedastic: it
/// is ordinary least squares of `ηT·ε̂` on `ηT`, with `b` as the intercept.
pub fn fit_bob_noise_law(
    params: &LinkParams,
    budget: &NoiseBudget,
    va: f64,
    distances_km: &[f64],
    samples: usize,
    seed: u64,
) -> Result<BobNoiseLawFit> {
    if distances_km.len() < 3 {
        return Err(Error::domain("need at least three distances to fit the law"));
    }
    let budget = budget.with_mode(NoiseMode::Realistic);
    let points = distances_km
        .par_iter()
        .enumerate()
        .map(|(k, &d)| {
            let link = params.at_distance(d)?;
            let cfg = SimConfig::from_physical(&link, &budget, va, seed, samples)?;
            let est = estimate_parameters(&simulate_stream(&cfg, k as u64), va)?;
            Ok(LawPoint {
                distance_km: d,
                eta_t: link.overall_transmission(),
                eps_hat: est.excess_noise(params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.eta_t).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.eta_t * p.eps_hat).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("all distances share one transmission".into()));
    }
    let a = sxy / sxx;
    Ok(BobNoiseLawFit {
        intercept: a,
        slope: my - a * mx,
        points,
    })
}
