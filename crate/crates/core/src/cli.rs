//! Command-line front end. `run` returns the process exit status:
//! 0 success, 1 bad input or I/O failure, 2 no key (rate not above the
//! floor), 3 no interior T_peak.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{RunConfig, CONFIG_ENV};
use crate::error::{Error, Result};
use crate::finite_size::{find_t_peak, PeakSearch};
use crate::gaussian_info::{holevo_bound, mutual_information, ChannelState};
use crate::mc_validate::{coverage_experiment, estimate_parameters, simulate_channel, SimConfig};
use crate::noise_model::{effective_excess_noise, NoiseMode};
use crate::output::{dataset_dump, fmt10, rate_csv, rate_csv_row, rate_json, table_csv, table_json, write_artifact, RATE_CSV_HEADER};
use crate::rate_engine::{
    beta_improvement_sweep, max_distance, optimize_va, rate_distance_curve, rate_point, MaxDistance, RateModel,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_KEY: i32 = 2;
pub const EXIT_NO_PEAK: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cvqkd", version, about = "CV-QKD key rates, rate-distance limits and finite-size analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalOpts {
    /// Config file (`key = value` lines). Defaults to $CVQKD_CONFIG when set.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Start from a built-in configuration: fig1..fig5 or coverage.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Override one key, e.g. `--set link.distance_km=80`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory (same as `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Optimised key rate at `link.distance_km`.
    Rate,
    /// Rate-distance curves for the configured series.
    Curve,
    /// Largest distance with key rate above `max_distance.floor`.
    MaxDistance,
    /// Holevo-bound peak versus transmittance at fixed pure noise.
    Tpeak,
    /// Gain in maximum distance between two reconciliation efficiencies.
    BetaSweep,
    /// Dump simulated (x, y) samples of the linear channel.
    Simulate,
    /// Empirical coverage of the parameter-estimation confidence region.
    Coverage,
}

/// Merge preset, config file, `--set` overrides and `--out`, in that order.
pub fn load_config(opts: &GlobalOpts) -> Result<RunConfig> {
    let mut cfg = match &opts.preset {
        Some(name) => RunConfig::preset(name)?,
        None => RunConfig::default(),
    };
    let path = opts
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    if let Some(path) = path {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for item in &opts.overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::config(item.as_str(), "override must look like KEY=VALUE"))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(dir) = &opts.out {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = load_config(&cli.global).and_then(|cfg| dispatch(cli.command, &cfg, out));
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn dispatch(command: Command, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Rate => cmd_rate(cfg, out),
        Command::Curve => cmd_curve(cfg, out),
        Command::MaxDistance => cmd_max_distance(cfg, out),
        Command::Tpeak => cmd_tpeak(cfg, out),
        Command::BetaSweep => cmd_beta_sweep(cfg, out),
        Command::Simulate => cmd_simulate(cfg, out),
        Command::Coverage => cmd_coverage(cfg, out),
    }
}

fn say(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn write_echo(dir: &Path, cfg: &RunConfig) -> Result<()> {
    write_artifact(dir, "config.echo", &cfg.echo())
}

pub fn cmd_rate(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let spec = cfg.protocol()?;
    let link = cfg
        .link_params()?
        .at_distance(cfg.distance_km)
        .map_err(|e| Error::config("link.distance_km", e.to_string()))?;
    let p = rate_point(&spec, &link, &cfg.noise_budget()?, &cfg.rate_model()?, cfg.bracket()?)?;
    say(out, &format!("{RATE_CSV_HEADER}\n{}\n", rate_csv_row(&p)))?;
    Ok(if p.key_rate > cfg.floor { EXIT_OK } else { EXIT_NO_KEY })
}

pub fn cmd_curve(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let params = cfg.link_params()?;
    let grid = cfg.grid.to_grid();
    grid.distances().map_err(|e| Error::config("grid", e.to_string()))?;
    let bracket = cfg.bracket()?;
    let series = cfg.resolved_series()?;
    let mut files = Vec::new();
    for s in &series {
        let curve = rate_distance_curve(&s.spec, &s.budget, &params, &s.model, &grid, bracket)?;
        if cfg.output_format.csv() {
            files.push((format!("{}.csv", s.stem), rate_csv(&curve.points)));
        }
        if cfg.output_format.json() {
            files.push((format!("{}.json", s.stem), rate_json(&curve.points)));
        }
        let last = curve
            .points
            .iter()
            .rfind(|p| p.key_rate > cfg.floor)
            .map(|p| fmt10(p.distance_km))
            .unwrap_or_else(|| "none".into());
        say(out, &format!("{}: {} points, last above floor at {last} km\n", s.stem, curve.points.len()))?;
    }
    for (name, body) in &files {
        write_artifact(&cfg.output_dir, name, body)?;
    }
    write_echo(&cfg.output_dir, cfg)?;
    Ok(EXIT_OK)
}

pub fn cmd_max_distance(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let spec = cfg.protocol()?;
    let opts = cfg.max_distance_options()?;
    let m = max_distance(&spec, &cfg.noise_budget()?, &cfg.link_params()?, &cfg.rate_model()?, &opts)?;
    let (line, code) = match m {
        MaxDistance::Reached { km } => (format!("max_distance_km = {}\n", fmt10(km)), EXIT_OK),
        MaxDistance::NoDistance => ("max_distance_km = none (no rate above the floor)\n".into(), EXIT_NO_KEY),
        MaxDistance::BeyondRange { searched_km } => (
            format!("max_distance_km > {} (still above the floor at the search limit)\n", fmt10(searched_km)),
            EXIT_OK,
        ),
    };
    say(out, &line)?;
    let mut body = serde_json::to_string_pretty(&json!({
        "protocol": spec.family.as_str(),
        "beta": spec.beta,
        "mode": cfg.budget.mode.as_str(),
        "variant": cfg.rate_model()?.label(),
        "floor": opts.floor,
        "result": m,
    }))
    .unwrap_or_default();
    body.push('\n');
    write_artifact(&cfg.output_dir, "max_distance.json", &body)?;
    write_echo(&cfg.output_dir, cfg)?;
    Ok(code)
}

pub const TPEAK_HEADER: [&str; 9] = [
    "T",
    "I_AB_solid",
    "S_yE_solid",
    "K_solid",
    "eps_solid",
    "I_AB_dashed",
    "S_yE_dashed",
    "K_dashed",
    "eps_dashed",
];

pub fn cmd_tpeak(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let spec = cfg.protocol()?;
    let params = cfg.link_params()?;
    let mut budget = cfg.noise_budget()?.with_mode(NoiseMode::PureTrusted);
    if let Some(eps) = cfg.tpeak_pure_eps {
        if !(eps >= 0.0) {
            return Err(Error::config("tpeak.pure_eps", "must be non-negative"));
        }
        budget.eps_a = eps;
        budget.eps_l = 0.0;
    }
    let eps_p = budget.pure();
    let reference = params
        .at_distance(cfg.tpeak_reference_km)
        .map_err(|e| Error::config("tpeak.reference_km", e.to_string()))?;
    let va = match cfg.tpeak_va {
        Some(va) if va > 0.0 => va,
        Some(_) => return Err(Error::config("tpeak.va", "must be positive")),
        None => optimize_va(&spec, &reference, &budget, &RateModel::Asymptotic, cfg.bracket()?)?.va,
    };
    let trusted = effective_excess_noise(&budget, &reference)?.trusted_noise;
    let eta = params.eta;
    let sigma2_ref = 1.0 + trusted + reference.overall_transmission() * eps_p;

    if cfg.tpeak_points < 2 {
        return Err(Error::config("tpeak.points", "need at least 2 points"));
    }
    let n = cfg.tpeak_points;
    let mut rows = Vec::with_capacity(n);
    for k in 1..=n {
        let t_big = k as f64 / n as f64;
        let eps_dashed = ((sigma2_ref - 1.0 - trusted) / (eta * t_big)).max(0.0);
        let mut row = vec![t_big];
        for eps in [eps_p, eps_dashed] {
            let state = ChannelState {
                transmittance: t_big,
                eta,
                trusted_noise: trusted,
                epsilon: eps,
            };
            let i_ab = mutual_information(spec.family, va, &state)?;
            let s = holevo_bound(spec.family, va, &state)?.s_ye;
            row.extend([i_ab, s, spec.beta * i_ab - s, eps]);
        }
        rows.push(row);
    }
    if cfg.output_format.csv() {
        write_artifact(&cfg.output_dir, "tpeak_curves.csv", &table_csv(&TPEAK_HEADER, &rows))?;
    }
    if cfg.output_format.json() {
        write_artifact(&cfg.output_dir, "tpeak_curves.json", &table_json(&TPEAK_HEADER, &rows))?;
    }
    write_echo(&cfg.output_dir, cfg)?;

    match find_t_peak(spec.family, va, eta, trusted, eps_p)? {
        PeakSearch::Interior(p) => {
            say(
                out,
                &format!(
                    "T_peak = {}\nt_peak = {}\nS_yE_peak = {}\nV_A = {}\neps_p = {}\n",
                    fmt10(p.transmittance),
                    fmt10(p.t_peak),
                    fmt10(p.s_ye),
                    fmt10(va),
                    fmt10(eps_p)
                ),
            )?;
            Ok(EXIT_OK)
        }
        PeakSearch::Monotone { increasing } => {
            let dir = if increasing { "increasing" } else { "decreasing" };
            say(out, &format!("no interior peak: S(y:E) is {dir} in T over (0, 1]\n"))?;
            Ok(EXIT_NO_PEAK)
        }
    }
}

pub fn cmd_beta_sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let family = cfg.family()?;
    let rows = beta_improvement_sweep(
        family,
        &cfg.sweep_eps,
        cfg.sweep_betas,
        &cfg.link_params()?,
        &cfg.max_distance_options()?,
    )
    .map_err(|e| Error::config("beta_sweep", e.to_string()))?;
    let header = ["eps", "beta_low", "beta_high", "max_low_km", "max_high_km", "delta_km"];
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.eps,
                r.beta_low,
                r.beta_high,
                r.max_low.km().unwrap_or(f64::NAN),
                r.max_high.km().unwrap_or(f64::NAN),
                r.delta_km.unwrap_or(f64::NAN),
            ]
        })
        .collect();
    let csv = table_csv(&header, &table);
    say(out, &csv)?;
    if cfg.output_format.csv() {
        write_artifact(&cfg.output_dir, "beta_sweep.csv", &csv)?;
    }
    if cfg.output_format.json() {
        write_artifact(&cfg.output_dir, "beta_sweep.json", &table_json(&header, &table))?;
    }
    write_echo(&cfg.output_dir, cfg)?;
    Ok(EXIT_OK)
}

fn sim_config(cfg: &RunConfig) -> Result<SimConfig> {
    let link = cfg
        .link_params()?
        .at_distance(cfg.distance_km)
        .map_err(|e| Error::config("link.distance_km", e.to_string()))?;
    SimConfig::from_physical(&link, &cfg.noise_budget()?, cfg.sim_va, cfg.seed, cfg.samples)
        .map_err(|e| Error::config("sim", e.to_string()))
}

pub fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let sim = sim_config(cfg)?;
    let data = simulate_channel(&sim)?;
    let est = estimate_parameters(&data, sim.va)?;
    let eps_hat = est.excess_noise(&cfg.link)?;
    // Leave the output location out so the file depends only on the run.
    let echo: String = cfg.echo().lines().filter(|l| !l.starts_with("output.")).map(|l| format!("{l}\n")).collect();
    write_artifact(&cfg.output_dir, "dataset.tsv", &dataset_dump(&echo, &data))?;
    write_echo(&cfg.output_dir, cfg)?;
    say(
        out,
        &format!(
            "samples = {}\nt = {}\nt_hat = {}\nsigma2 = {}\nsigma2_hat = {}\neps_hat = {}\n",
            data.len(),
            fmt10(sim.t),
            fmt10(est.t_hat),
            fmt10(sim.sigma2),
            fmt10(est.sigma2_hat),
            fmt10(eps_hat)
        ),
    )?;
    Ok(EXIT_OK)
}

pub fn cmd_coverage(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let sim = sim_config(cfg)?;
    let report = coverage_experiment(&sim, cfg.coverage_delta_pe, cfg.coverage_trials)
        .map_err(|e| match e {
            Error::Domain(m) => Error::config("coverage", m),
            other => other,
        })?;
    let mut body = serde_json::to_string_pretty(&json!({
        "nominal": report.nominal,
        "empirical": report.empirical,
        "trials": report.trials,
        "covered": report.covered,
        "samples_per_trial": sim.samples,
        "z_score": report.z_score,
        "t_coverage": report.t_coverage,
        "sigma2_coverage": report.sigma2_coverage,
        "ci95": [report.ci_low, report.ci_high],
        "band_5sigma": [report.band_low, report.band_high],
        "within_band": report.within_band(),
    }))
    .unwrap_or_default();
    body.push('\n');
    write_artifact(&cfg.output_dir, "coverage.json", &body)?;
    write_echo(&cfg.output_dir, cfg)?;
    say(out, &body)?;
    Ok(EXIT_OK)
}
