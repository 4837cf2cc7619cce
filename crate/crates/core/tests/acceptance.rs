//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::time::{Duration, Instant};

use cvqkd::finite_size::{find_t_peak, FiniteSizeSetup, FiniteVariant, PeakSearch};
use cvqkd::gaussian_info::{
    holevo_bound, holevo_from_t_sigma, mutual_information, mutual_information_chi, ChannelState, ProtocolFamily,
    ProtocolSpec,
};
use cvqkd::mc_validate::{coverage_experiment, fit_bob_noise_law, SimConfig};
use cvqkd::noise_model::{LinkParams, NoiseBudget, NoiseMode};
use cvqkd::rate_engine::{
    beta_improvement_sweep, max_distance, optimize_va, rate_distance_curve, DistanceGrid, MaxDistance,
    MaxDistanceOptions, RateModel, DEFAULT_VA_BRACKET,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GG02: ProtocolFamily = ProtocolFamily::CoherentHomodyne;

fn report(id: u32, pass: bool, detail: String) {
    println!("criterion {id:>2}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn realistic_budget() -> NoiseBudget {
    NoiseBudget {
        eps_a: 0.005,
        eps_l: 0.0,
        eps_b: 5e-4,
        mode: NoiseMode::Realistic,
    }
}

fn pure_trusted_budget() -> NoiseBudget {
    realistic_budget().with_mode(NoiseMode::PureTrusted)
}

fn km(m: MaxDistance) -> f64 {
    m.km().unwrap_or(f64::NAN)
}

#[test]
fn criterion_01_squeezed_reaches_about_500_km() {
    let start = Instant::now();
    let spec = ProtocolSpec::new(ProtocolFamily::SqueezedHomodyne, 0.95).unwrap();
    let d = max_distance(
        &spec,
        &NoiseBudget::ideal(0.01),
        &LinkParams::default(),
        &RateModel::Asymptotic,
        &MaxDistanceOptions::default(),
    )
    .unwrap();
    let elapsed = start.elapsed();
    let d = km(d);
    report(
        1,
        (400.0..=550.0).contains(&d) && elapsed < Duration::from_secs(30),
        format!("squeezed max distance {d:.1} km (want [400, 550]), {elapsed:.1?}"),
    );
}

#[test]
fn criterion_02_realistic_gg02_about_100_km() {
    let start = Instant::now();
    let spec = ProtocolSpec::new(GG02, 0.99).unwrap();
    let d = max_distance(
        &spec,
        &realistic_budget(),
        &LinkParams::default(),
        &RateModel::Asymptotic,
        &MaxDistanceOptions::default(),
    )
    .unwrap();
    let elapsed = start.elapsed();
    let d = km(d);
    report(
        2,
        (80.0..=120.0).contains(&d) && elapsed < Duration::from_secs(30),
        format!("realistic GG02 max distance {d:.1} km (want [80, 120]), {elapsed:.1?}"),
    );
}

#[test]
fn criterion_03_eta_t_at_39_km() {
    let link = LinkParams::default().at_distance(39.0).unwrap();
    let eta_t = link.overall_transmission();
    report(3, (eta_t - 0.1).abs() <= 0.002, format!("ηT at 39 km = {eta_t:.5} (want 0.1 ± 0.002)"));
}

#[test]
fn criterion_04_pure_noise_tight_limit_at_1e12() {
    let start = Instant::now();
    let spec = ProtocolSpec::new(GG02, 0.99).unwrap();
    let setup = FiniteSizeSetup::symmetric(1_000_000_000_000).unwrap();
    let model = RateModel::Finite {
        setup,
        variant: FiniteVariant::Tight,
    };
    let d = max_distance(&spec, &pure_trusted_budget(), &LinkParams::default(), &model, &MaxDistanceOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let d = km(d);
    report(
        4,
        (165.0..=235.0).contains(&d) && elapsed < Duration::from_secs(300),
        format!("tight N=1e12 max distance {d:.1} km (want [165, 235]), {elapsed:.1?}"),
    );
}

#[test]
fn criterion_05_beta_gain_grows_with_noise() {
    let rows = beta_improvement_sweep(
        GG02,
        &[0.001, 0.01, 0.05],
        (0.95, 0.99),
        &LinkParams::default(),
        &MaxDistanceOptions::default(),
    )
    .unwrap();
    let gains: Vec<f64> = rows.iter().map(|r| r.delta_km.unwrap_or(f64::NAN)).collect();
    let increasing = gains.windows(2).all(|w| w[1] > w[0]);
    report(5, increasing, format!("Δmax_distance for ε = 0.001, 0.01, 0.05: {gains:.1?} km"));
}

#[test]
fn criterion_06_holevo_peak_and_fixed_sigma_slopes() {
    let params = LinkParams::default();
    let budget = pure_trusted_budget();
    let spec = ProtocolSpec::new(GG02, 0.99).unwrap();
    let reference = params.at_distance(39.0).unwrap();
    let va = optimize_va(&spec, &reference, &budget, &RateModel::Asymptotic, DEFAULT_VA_BRACKET)
        .unwrap()
        .va;
    let (eta, eps) = (params.eta, budget.pure());
    let trusted = params.nu_e + budget.eps_b;

    let peak = find_t_peak(GG02, va, eta, trusted, eps).unwrap();
    let PeakSearch::Interior(p) = peak else {
        report(6, false, "no interior peak".into());
        return;
    };

    // Count local maxima of S(T) on a dense grid.
    let s_at = |t_big: f64| {
        let state = ChannelState {
            transmittance: t_big,
            eta,
            trusted_noise: trusted,
            epsilon: eps,
        };
        holevo_bound(GG02, va, &state).unwrap().s_ye
    };
    let grid: Vec<f64> = (1..10_000).map(|k| k as f64 / 10_000.0).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| s_at(t)).collect();
    let maxima = (1..vals.len() - 1).filter(|&i| vals[i] > vals[i - 1] && vals[i] >= vals[i + 1]).count();

    let slope = |t_op: f64| {
        let sigma2 = 1.0 + trusted + t_op * t_op * eps;
        let s = |t: f64| holevo_from_t_sigma(GG02, va, t, sigma2, eta, trusted).unwrap().s_ye;
        (s(t_op + 1e-6) - s(t_op - 1e-6)) / 2e-6
    };
    // Dense samples on both sides of the peak, up to 0.1 % away from it.
    let t_cap = eta.sqrt() * (1.0 - 1e-5);
    let left: Vec<f64> = (0..400).map(|k| p.t_peak * (0.05 + 0.949 * k as f64 / 399.0)).collect();
    let right: Vec<f64> = (0..400)
        .map(|k| p.t_peak * 1.001 + (t_cap - p.t_peak * 1.001) * k as f64 / 399.0)
        .collect();
    let bad_left: Vec<f64> = left.iter().copied().filter(|&t| slope(t) <= 0.0).collect();
    let bad_right = right.iter().filter(|&&t| slope(t) >= 0.0).count();
    let sign_flip = bad_left.iter().copied().fold(f64::NAN, f64::min) / p.t_peak;
    report(
        6,
        maxima == 1 && bad_left.is_empty() && bad_right == 0,
        format!(
            "T_peak = {:.4}, t_peak = {:.4}, V_A = {va:.3}, local maxima = {maxima}; ∂S/∂t|σ² ≤ 0 at {} of 400 left points \
             (from t/t_peak = {sign_flip:.4}), ≥ 0 at {bad_right} of 400 right points",
            p.transmittance,
            p.t_peak,
            bad_left.len()
        ),
    );
}

#[test]
fn criterion_07_tight_below_loose_and_gap_shrinks() {
    let spec = ProtocolSpec::new(GG02, 0.99).unwrap();
    let params = LinkParams::default();
    let grid = DistanceGrid::default();
    let opts = MaxDistanceOptions::default();
    let mut pointwise = true;
    let mut worst_excess = f64::MIN;
    let mut gaps = Vec::new();
    for total in [100_000_000u64, 10_000_000_000, 1_000_000_000_000] {
        let setup = FiniteSizeSetup::symmetric(total).unwrap();
        let curve = |variant| {
            rate_distance_curve(&spec, &pure_trusted_budget(), &params, &RateModel::Finite { setup, variant }, &grid, DEFAULT_VA_BRACKET)
                .unwrap()
        };
        let (tight, loose) = (curve(FiniteVariant::Tight), curve(FiniteVariant::Loose));
        for (a, b) in tight.points.iter().zip(&loose.points) {
            worst_excess = worst_excess.max(a.key_rate - b.key_rate);
            pointwise &= a.key_rate <= b.key_rate;
        }
        let limit = |variant| km(max_distance(&spec, &pure_trusted_budget(), &params, &RateModel::Finite { setup, variant }, &opts).unwrap());
        gaps.push(limit(FiniteVariant::Loose) - limit(FiniteVariant::Tight));
    }
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    report(
        7,
        pointwise && shrinking,
        format!("tight ≤ loose everywhere: {pointwise} (max tight − loose = {worst_excess:.3e}), loose − tight limit gaps {gaps:.2?} km"),
    );
}

#[test]
fn criterion_08_realistic_finite_family_ordering() {
    let spec = ProtocolSpec::new(GG02, 0.99).unwrap();
    let params = LinkParams::default();
    let grid = DistanceGrid::Linear {
        start_km: 0.0,
        stop_km: 120.0,
        points: 61,
    };
    let asym = rate_distance_curve(&spec, &realistic_budget(), &params, &RateModel::Asymptotic, &grid, DEFAULT_VA_BRACKET)
        .unwrap();
    let curves: Vec<_> = [100_000_000u64, 10_000_000_000, 1_000_000_000_000]
        .iter()
        .map(|&n| {
            let setup = FiniteSizeSetup::symmetric(n).unwrap();
            let model = RateModel::Finite {
                setup,
                variant: FiniteVariant::Tight,
            };
            rate_distance_curve(&spec, &realistic_budget(), &params, &model, &grid, DEFAULT_VA_BRACKET).unwrap()
        })
        .collect();
    // Compare achievable rates: a negative rate means no key at all.
    let below = |lo: f64, hi: f64| if hi > 0.0 { lo < hi } else { lo <= 0.0 };
    let mut ok = true;
    for i in 0..asym.points.len() {
        let k: Vec<f64> = curves.iter().map(|c| c.points[i].key_rate).collect();
        ok &= below(k[0], k[1]) && below(k[1], k[2]) && below(k[2], asym.points[i].key_rate);
    }
    let last: Vec<Option<f64>> = curves.iter().map(|c| c.last_positive_km()).collect();
    report(
        8,
        ok,
        format!(
            "1e8 < 1e10 < 1e12 < asymptotic at all {} points: {ok}; last positive km {last:?} vs asymptotic {:?}",
            asym.points.len(),
            asym.last_positive_km()
        ),
    );
}

#[test]
fn criterion_09_information_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let state = ChannelState {
            transmittance: rng.random_range(1e-4..1.0),
            eta: rng.random_range(0.05..1.0),
            trusted_noise: rng.random_range(0.0..0.5),
            epsilon: rng.random_range(0.0..0.2),
        };
        let va = rng.random_range(0.01..100.0);
        for family in ProtocolFamily::ALL {
            let a = mutual_information(family, va, &state).unwrap();
            let b = mutual_information_chi(family, va, &state).unwrap();
            worst = worst.max(((a - b) / a).abs());
        }
    }
    let mut s_max = 0.0f64;
    for family in ProtocolFamily::ALL {
        for va in [0.01, 1.0, 10.0, 100.0] {
            let state = ChannelState {
                transmittance: 1.0,
                eta: 1.0,
                trusted_noise: 0.0,
                epsilon: 0.0,
            };
            s_max = s_max.max(holevo_bound(family, va, &state).unwrap().s_ye.abs());
        }
    }
    report(
        9,
        worst <= 1e-12 && s_max <= 1e-9,
        format!("max relative I_AB mismatch {worst:.2e} over 3000 evaluations; max |S(y:E)| at T=1, ε=0: {s_max:.2e}"),
    );
}

#[test]
fn criterion_10_monte_carlo_coverage_and_bob_noise_law() {
    let start = Instant::now();
    let cfg = SimConfig {
        seed: 2024,
        samples: 100_000,
        t: (0.6f64 * 0.2).sqrt(),
        sigma2: 1.1 + 0.12 * 0.01,
        va: 4.0,
    };
    let cov = coverage_experiment(&cfg, 0.01, 10_000).unwrap();
    let cov_ok = (0.985..=0.995).contains(&cov.empirical);

    let params = LinkParams::default();
    let injected = NoiseBudget {
        eps_a: 0.003,
        eps_l: 0.002,
        eps_b: 0.02,
        mode: NoiseMode::Realistic,
    };
    let distances: Vec<f64> = (0..=100).map(f64::from).collect();
    let fit = fit_bob_noise_law(&params, &injected, 4.0, &distances, 1_000_000, 7).unwrap();
    let rel = (fit.slope - injected.eps_b).abs() / injected.eps_b;
    let elapsed = start.elapsed();
    report(
        10,
        cov_ok && rel <= 0.1 && elapsed < Duration::from_secs(600),
        format!(
            "coverage {:.4} (want [0.985, 0.995]); fitted ε_b {:.5} vs injected {} ({:.1} % off), ε_a+ε_l fit {:.5}; {elapsed:.1?}",
            cov.empirical,
            fit.slope,
            injected.eps_b,
            100.0 * rel,
            fit.intercept
        ),
    );
}
