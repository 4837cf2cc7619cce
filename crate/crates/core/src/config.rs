//! Run configuration: flat `key = value` text with dotted namespaces.
//!
//! ```text
//! # GG02 over the realistic budget
//! protocol.family = coherent-homodyne
//! protocol.beta   = 0.99
//! noise.mode      = realistic
//! noise.eps_a     = 0.005
//! noise.eps_b     = 5e-4
//! ```
//!
//! Unknown keys and malformed values are errors that name the key. Every key
//! except `protocol.family` has a default.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::finite_size::{FiniteSizeSetup, FiniteVariant, DEFAULT_FAILURE_PROBABILITY};
use crate::gaussian_info::{ProtocolFamily, ProtocolSpec};
use crate::noise_model::{LinkParams, NoiseBudget, NoiseMode};
use crate::rate_engine::{
    DistanceGrid, MaxDistanceOptions, RateModel, DEFAULT_MAX_SEARCH_KM, DEFAULT_RATE_FLOOR, DEFAULT_VA_BRACKET,
    DISTANCE_RESOLUTION_KM,
};

/// Environment variable naming the config file read when none is given.
pub const CONFIG_ENV: &str = "CVQKD_CONFIG";

pub const PRESETS: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "coverage"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Log,
    Linear,
    List,
}

impl GridKind {
    fn as_str(&self) -> &'static str {
        match self {
            GridKind::Log => "log",
            GridKind::Linear => "linear",
            GridKind::List => "list",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub kind: GridKind,
    pub start_km: f64,
    pub stop_km: f64,
    pub points: usize,
    pub distances_km: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            kind: GridKind::Log,
            start_km: 1.0,
            stop_km: 600.0,
            points: 241,
            distances_km: Vec::new(),
        }
    }
}

impl GridConfig {
    pub fn to_grid(&self) -> DistanceGrid {
        match self.kind {
            GridKind::Log => DistanceGrid::Log {
                start_km: self.start_km,
                stop_km: self.stop_km,
                points: self.points,
            },
            GridKind::Linear => DistanceGrid::Linear {
                start_km: self.start_km,
                stop_km: self.stop_km,
                points: self.points,
            },
            GridKind::List => DistanceGrid::List {
                distances_km: self.distances_km.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteConfig {
    /// N; `None` selects the asymptotic rate.
    pub total: Option<u64>,
    /// Estimation samples; `None` means N/2.
    pub m: Option<u64>,
    pub delta_pe: f64,
    pub delta: f64,
    pub variant: FiniteVariant,
}

impl Default for FiniteConfig {
    fn default() -> Self {
        FiniteConfig {
            total: None,
            m: None,
            delta_pe: DEFAULT_FAILURE_PROBABILITY,
            delta: DEFAULT_FAILURE_PROBABILITY,
            variant: FiniteVariant::Tight,
        }
    }
}

impl FiniteConfig {
    fn setup(&self, total: u64) -> Result<FiniteSizeSetup> {
        FiniteSizeSetup::new(total, self.m.unwrap_or(total / 2), self.delta_pe, self.delta)
            .map_err(|e| Error::config("finite.N", e.to_string()))
    }
}

/// One curve of a `curve` run. Unset fields fall back to the top-level keys.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeriesSpec {
    pub family: Option<ProtocolFamily>,
    pub beta: Option<f64>,
    pub mode: Option<NoiseMode>,
    /// Constant excess noise replacing the budget.
    pub eps: Option<f64>,
    /// `None` is the asymptotic rate.
    pub variant: Option<FiniteVariant>,
    pub total: Option<u64>,
}

impl SeriesSpec {
    fn parse(text: &str) -> Result<Self> {
        let key = "curve.series";
        let mut s = SeriesSpec::default();
        for item in text.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::config(key, format!("expected name=value, got `{item}`")))?;
            let (k, v) = (k.trim(), v.trim());
            let bad = |e: Error| Error::config(key, format!("{k}: {e}"));
            match k {
                "family" => s.family = Some(v.parse().map_err(bad)?),
                "beta" => s.beta = Some(parse_f64(key, v)?),
                "mode" => s.mode = Some(v.parse().map_err(bad)?),
                "eps" => s.eps = Some(parse_f64(key, v)?),
                "variant" => {
                    s.variant = match v {
                        "asymptotic" => None,
                        _ => Some(v.parse().map_err(bad)?),
                    }
                }
                "N" => s.total = Some(parse_count(key, v)?),
                _ => return Err(Error::config(key, format!("unknown series field `{k}`"))),
            }
        }
        if s.variant.is_some() != s.total.is_some() {
            return Err(Error::config(key, format!("`{text}`: finite-size series need both variant and N")));
        }
        Ok(s)
    }

    fn render(&self) -> String {
        let mut parts = Vec::new();
        if let Some(f) = self.family {
            parts.push(format!("family={f}"));
        }
        if let Some(b) = self.beta {
            parts.push(format!("beta={}", num(b)));
        }
        if let Some(m) = self.mode {
            parts.push(format!("mode={m}"));
        }
        if let Some(e) = self.eps {
            parts.push(format!("eps={}", num(e)));
        }
        match self.variant {
            Some(v) => parts.push(format!("variant={v}")),
            None => parts.push("variant=asymptotic".into()),
        }
        if let Some(n) = self.total {
            parts.push(format!("N={n}"));
        }
        parts.join(",")
    }
}

/// A fully resolved curve: what to compute and a file stem for it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSeries {
    pub spec: ProtocolSpec,
    pub budget: NoiseBudget,
    pub model: RateModel,
    pub stem: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn csv(&self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(&self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: Option<ProtocolFamily>,
    pub beta: f64,
    pub link: LinkParams,
    pub distance_km: f64,
    pub budget: NoiseBudget,
    pub va_bracket: (f64, f64),
    pub grid: GridConfig,
    pub finite: FiniteConfig,
    pub series: Vec<SeriesSpec>,
    pub floor: f64,
    pub max_km: f64,
    pub resolution_km: f64,
    /// Pure excess noise for the T_peak analysis; defaults to ε_a + ε_l.
    pub tpeak_pure_eps: Option<f64>,
    /// V_A for the T_peak analysis; defaults to the optimum at the reference.
    pub tpeak_va: Option<f64>,
    pub tpeak_reference_km: f64,
    pub tpeak_points: usize,
    pub seed: u64,
    pub samples: usize,
    pub sim_va: f64,
    pub coverage_trials: usize,
    pub coverage_delta_pe: f64,
    pub sweep_eps: Vec<f64>,
    pub sweep_betas: (f64, f64),
    pub output_dir: PathBuf,
    pub output_format: OutputFormat,
}

impl Default for RunConfig {
    /// β = 0.95, ε = 0.01 (ideal), η = 0.6, υe = 0.1, 0.2 dB/km.
    fn default() -> Self {
        RunConfig {
            family: None,
            beta: 0.95,
            link: LinkParams::default(),
            distance_km: 39.0,
            budget: NoiseBudget::ideal(0.01),
            va_bracket: DEFAULT_VA_BRACKET,
            grid: GridConfig::default(),
            finite: FiniteConfig::default(),
            series: Vec::new(),
            floor: DEFAULT_RATE_FLOOR,
            max_km: DEFAULT_MAX_SEARCH_KM,
            resolution_km: DISTANCE_RESOLUTION_KM,
            tpeak_pure_eps: None,
            tpeak_va: None,
            tpeak_reference_km: 39.0,
            tpeak_points: 200,
            seed: 42,
            samples: 100_000,
            sim_va: 4.0,
            coverage_trials: 10_000,
            coverage_delta_pe: 0.01,
            sweep_eps: vec![0.001, 0.01, 0.05],
            sweep_betas: (0.95, 0.99),
            output_dir: PathBuf::from("out"),
            output_format: OutputFormat::Csv,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::config(key, format!("`{v}` is not finite")));
    }
    Ok(x)
}

/// Counts accept `1e12` as well as `1000000000000`.
fn parse_count(key: &str, v: &str) -> Result<u64> {
    if let Ok(n) = v.trim().parse::<u64>() {
        return Ok(n);
    }
    let x = parse_f64(key, v)?;
    if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
        return Err(Error::config(key, format!("`{v}` is not a non-negative integer")));
    }
    Ok(x as u64)
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| parse_f64(key, x))
        .collect()
}

fn parse_pair(key: &str, v: &str) -> Result<(f64, f64)> {
    match parse_list(key, v)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::config(key, format!("expected two comma-separated values, got `{v}`"))),
    }
}

fn parse_opt_f64(key: &str, v: &str) -> Result<Option<f64>> {
    if v.trim() == "auto" {
        Ok(None)
    } else {
        parse_f64(key, v).map(Some)
    }
}

/// Shortest text that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let named = |e: Error| match e {
            Error::Config { .. } => e,
            other => Error::config(key, other.to_string()),
        };
        match key {
            "protocol.family" => self.family = Some(v.parse().map_err(named)?),
            "protocol.beta" => self.beta = parse_f64(key, v)?,
            "link.eta" => self.link.eta = parse_f64(key, v)?,
            "link.nu_e" => self.link.nu_e = parse_f64(key, v)?,
            "link.attenuation_db_per_km" => self.link.attenuation_db_per_km = parse_f64(key, v)?,
            "link.distance_km" => self.distance_km = parse_f64(key, v)?,
            "noise.mode" => self.budget.mode = v.parse().map_err(named)?,
            "noise.eps_a" => self.budget.eps_a = parse_f64(key, v)?,
            "noise.eps_l" => self.budget.eps_l = parse_f64(key, v)?,
            "noise.eps_b" => self.budget.eps_b = parse_f64(key, v)?,
            "optimizer.va_min" => self.va_bracket.0 = parse_f64(key, v)?,
            "optimizer.va_max" => self.va_bracket.1 = parse_f64(key, v)?,
            "grid.kind" => {
                self.grid.kind = match v {
                    "log" => GridKind::Log,
                    "linear" => GridKind::Linear,
                    "list" => GridKind::List,
                    _ => return Err(Error::config(key, format!("expected log, linear or list, got `{v}`"))),
                }
            }
            "grid.start_km" => self.grid.start_km = parse_f64(key, v)?,
            "grid.stop_km" => self.grid.stop_km = parse_f64(key, v)?,
            "grid.points" => self.grid.points = parse_count(key, v)? as usize,
            "grid.distances_km" => self.grid.distances_km = parse_list(key, v)?,
            "finite.N" => {
                self.finite.total = match v {
                    "none" | "asymptotic" => None,
                    _ => Some(parse_count(key, v)?),
                }
            }
            "finite.m" => {
                self.finite.m = match v {
                    "auto" => None,
                    _ => Some(parse_count(key, v)?),
                }
            }
            "finite.delta_pe" => self.finite.delta_pe = parse_f64(key, v)?,
            "finite.delta" => self.finite.delta = parse_f64(key, v)?,
            "finite.variant" => self.finite.variant = v.parse().map_err(named)?,
            "curve.series" => {
                self.series = v
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(SeriesSpec::parse)
                    .collect::<Result<_>>()?
            }
            "max_distance.floor" => self.floor = parse_f64(key, v)?,
            "max_distance.max_km" => self.max_km = parse_f64(key, v)?,
            "max_distance.resolution_km" => self.resolution_km = parse_f64(key, v)?,
            "tpeak.pure_eps" => self.tpeak_pure_eps = parse_opt_f64(key, v)?,
            "tpeak.va" => self.tpeak_va = parse_opt_f64(key, v)?,
            "tpeak.reference_km" => self.tpeak_reference_km = parse_f64(key, v)?,
            "tpeak.points" => self.tpeak_points = parse_count(key, v)? as usize,
            "sim.seed" => self.seed = parse_count(key, v)?,
            "sim.samples" => self.samples = parse_count(key, v)? as usize,
            "sim.va" => self.sim_va = parse_f64(key, v)?,
            "coverage.trials" => self.coverage_trials = parse_count(key, v)? as usize,
            "coverage.delta_pe" => self.coverage_delta_pe = parse_f64(key, v)?,
            "beta_sweep.eps" => self.sweep_eps = parse_list(key, v)?,
            "beta_sweep.betas" => self.sweep_betas = parse_pair(key, v)?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            "output.format" => {
                self.output_format = match v {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    "both" => OutputFormat::Both,
                    _ => return Err(Error::config(key, format!("expected csv, json or both, got `{v}`"))),
                }
            }
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Apply every `key = value` line of `text`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(line, format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = preset_text(name).ok_or_else(|| {
            Error::config("preset", format!("unknown preset `{name}` (have {})", PRESETS.join(", ")))
        })?;
        RunConfig::parse(text)
    }

    /// Every key with its effective value, one per line, in a fixed order.
    /// Parsing the result gives back an equal config.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        if let Some(f) = self.family {
            put("protocol.family", f.to_string());
        }
        put("protocol.beta", num(self.beta));
        put("link.eta", num(self.link.eta));
        put("link.nu_e", num(self.link.nu_e));
        put("link.attenuation_db_per_km", num(self.link.attenuation_db_per_km));
        put("link.distance_km", num(self.distance_km));
        put("noise.mode", self.budget.mode.to_string());
        put("noise.eps_a", num(self.budget.eps_a));
        put("noise.eps_l", num(self.budget.eps_l));
        put("noise.eps_b", num(self.budget.eps_b));
        put("optimizer.va_min", num(self.va_bracket.0));
        put("optimizer.va_max", num(self.va_bracket.1));
        put("grid.kind", self.grid.kind.as_str().into());
        put("grid.start_km", num(self.grid.start_km));
        put("grid.stop_km", num(self.grid.stop_km));
        put("grid.points", self.grid.points.to_string());
        put("grid.distances_km", join(&self.grid.distances_km));
        put("finite.N", self.finite.total.map_or("none".into(), |n| n.to_string()));
        put("finite.m", self.finite.m.map_or("auto".into(), |n| n.to_string()));
        put("finite.delta_pe", num(self.finite.delta_pe));
        put("finite.delta", num(self.finite.delta));
        put("finite.variant", self.finite.variant.to_string());
        put(
            "curve.series",
            self.series.iter().map(SeriesSpec::render).collect::<Vec<_>>().join("; "),
        );
        put("max_distance.floor", num(self.floor));
        put("max_distance.max_km", num(self.max_km));
        put("max_distance.resolution_km", num(self.resolution_km));
        put("tpeak.pure_eps", self.tpeak_pure_eps.map_or("auto".into(), num));
        put("tpeak.va", self.tpeak_va.map_or("auto".into(), num));
        put("tpeak.reference_km", num(self.tpeak_reference_km));
        put("tpeak.points", self.tpeak_points.to_string());
        put("sim.seed", self.seed.to_string());
        put("sim.samples", self.samples.to_string());
        put("sim.va", num(self.sim_va));
        put("coverage.trials", self.coverage_trials.to_string());
        put("coverage.delta_pe", num(self.coverage_delta_pe));
        put("beta_sweep.eps", join(&self.sweep_eps));
        put("beta_sweep.betas", join(&[self.sweep_betas.0, self.sweep_betas.1]));
        put("output.dir", self.output_dir.display().to_string());
        put("output.format", self.output_format.as_str().into());
        out
    }

    pub fn family(&self) -> Result<ProtocolFamily> {
        self.family
            .ok_or_else(|| Error::config("protocol.family", "missing; set it in the config, with --set or via a preset"))
    }

    pub fn protocol(&self) -> Result<ProtocolSpec> {
        ProtocolSpec::new(self.family()?, self.beta).map_err(|e| Error::config("protocol.beta", e.to_string()))
    }

    pub fn link_params(&self) -> Result<LinkParams> {
        self.link.validate().map_err(|e| Error::config("link", e.to_string()))?;
        Ok(self.link)
    }

    pub fn noise_budget(&self) -> Result<NoiseBudget> {
        self.budget.validate().map_err(|e| Error::config("noise", e.to_string()))?;
        Ok(self.budget)
    }

    pub fn bracket(&self) -> Result<(f64, f64)> {
        let (lo, hi) = self.va_bracket;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::config("optimizer.va_min", format!("need 0 < va_min < va_max, got [{lo}, {hi}]")));
        }
        Ok(self.va_bracket)
    }

    /// Asymptotic unless `finite.N` is set.
    pub fn rate_model(&self) -> Result<RateModel> {
        match self.finite.total {
            None => Ok(RateModel::Asymptotic),
            Some(n) => Ok(RateModel::Finite {
                setup: self.finite.setup(n)?,
                variant: self.finite.variant,
            }),
        }
    }

    pub fn max_distance_options(&self) -> Result<MaxDistanceOptions> {
        if !(self.floor >= 0.0) {
            return Err(Error::config("max_distance.floor", "must be non-negative"));
        }
        Ok(MaxDistanceOptions {
            floor: self.floor,
            max_km: self.max_km,
            resolution_km: self.resolution_km,
            va_bracket: self.bracket()?,
            ..MaxDistanceOptions::default()
        })
    }

    /// The curves a `curve` run produces, in configuration order.
    pub fn resolved_series(&self) -> Result<Vec<ResolvedSeries>> {
        if self.series.is_empty() {
            let model = self.rate_model()?;
            let spec = self.protocol()?;
            return Ok(vec![ResolvedSeries {
                spec,
                budget: self.noise_budget()?,
                model,
                stem: "curve".into(),
            }]);
        }
        self.series
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let family = match s.family {
                    Some(f) => f,
                    None => self.family()?,
                };
                let spec = ProtocolSpec::new(family, s.beta.unwrap_or(self.beta))
                    .map_err(|e| Error::config("curve.series", e.to_string()))?;
                let mut budget = match s.eps {
                    Some(e) => NoiseBudget::ideal(e),
                    None => self.noise_budget()?,
                };
                budget.mode = s.mode.unwrap_or(self.budget.mode);
                budget.validate().map_err(|e| Error::config("curve.series", e.to_string()))?;
                let model = match (s.variant, s.total) {
                    (Some(variant), Some(n)) => RateModel::Finite {
                        setup: self.finite.setup(n)?,
                        variant,
                    },
                    _ => RateModel::Asymptotic,
                };
                let mut stem = format!("curve_{i:02}_{}_{}_{}", spec.family, budget.mode, model.label());
                if let Some(n) = s.total {
                    stem.push_str(&format!("_N{n:e}"));
                }
                if let Some(b) = s.beta {
                    stem.push_str(&format!("_beta{b}"));
                }
                if let Some(e) = s.eps {
                    stem.push_str(&format!("_eps{e}"));
                }
                Ok(ResolvedSeries { spec, budget, model, stem })
            })
            .collect()
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RunConfig::parse(s)
    }
}

/// Built-in named configurations.
pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1" => {
            "protocol.family = coherent-homodyne
             curve.series = family=squeezed-homodyne; family=coherent-homodyne; family=coherent-heterodyne"
        }
        "fig2" => {
            "protocol.family = coherent-homodyne
             curve.series = beta=0.95,eps=0.001; beta=0.99,eps=0.001; beta=0.95,eps=0.01; beta=0.99,eps=0.01; \
                            beta=0.95,eps=0.05; beta=0.99,eps=0.05
             beta_sweep.eps = 0.001, 0.01, 0.05
             beta_sweep.betas = 0.95, 0.99"
        }
        "fig3" => {
            "protocol.family = coherent-homodyne
             protocol.beta = 0.99
             noise.mode = realistic
             noise.eps_a = 0.005
             noise.eps_b = 5e-4
             grid.kind = linear
             grid.start_km = 0
             grid.stop_km = 500
             grid.points = 251
             curve.series = mode=realistic; mode=realistic,variant=tight,N=1e8; mode=realistic,variant=tight,N=1e10; \
                            mode=realistic,variant=tight,N=1e12; mode=pure-trusted; mode=ideal"
        }
        "fig4" => {
            "protocol.family = coherent-homodyne
             protocol.beta = 0.99
             noise.mode = pure-trusted
             noise.eps_a = 0.005
             noise.eps_b = 5e-4
             tpeak.pure_eps = 0.005
             tpeak.reference_km = 39"
        }
        "fig5" => {
            "protocol.family = coherent-homodyne
             protocol.beta = 0.99
             noise.mode = pure-trusted
             noise.eps_a = 0.005
             noise.eps_b = 5e-4
             grid.kind = linear
             grid.start_km = 0
             grid.stop_km = 250
             grid.points = 126
             curve.series = variant=tight,N=1e8; variant=loose,N=1e8; variant=tight,N=1e10; variant=loose,N=1e10; \
                            variant=tight,N=1e12; variant=loose,N=1e12; variant=lmin,N=1e12; variant=lmax,N=1e12"
        }
        "coverage" => {
            "protocol.family = coherent-homodyne
             link.distance_km = 39
             sim.seed = 42
             sim.samples = 100000
             sim.va = 4
             coverage.trials = 10000
             coverage.delta_pe = 0.01"
        }
        _ => return None,
    })
}
