//! Simulate the linear channel, estimate `(t, σ²)` from the samples, check
//! how often the confidence region covers the truth, and recover ε_b from
//! the 1/(ηT) growth of the estimated excess noise.

use cvqkd::mc_validate::{coverage_experiment, estimate_parameters, fit_bob_noise_law, simulate_channel, SimConfig};
use cvqkd::{LinkParams, NoiseBudget, NoiseMode};

fn main() -> cvqkd::Result<()> {
    let params = LinkParams::default();
    let budget = NoiseBudget {
        eps_a: 0.01,
        eps_l: 0.0,
        eps_b: 0.0,
        mode: NoiseMode::Ideal,
    };
    let link = params.at_distance(39.0)?;
    let cfg = SimConfig::from_physical(&link, &budget, 4.0, 42, 1_000_000)?;

    let data = simulate_channel(&cfg)?;
    let est = estimate_parameters(&data, cfg.va)?;
    println!("t     true {:.6}  estimated {:.6}", cfg.t, est.t_hat);
    println!("sigma true {:.6}  estimated {:.6}", cfg.sigma2, est.sigma2_hat);
    println!("eps   true {:.6}  estimated {:.6}", budget.eps_a, est.excess_noise(&params)?);

    let small = SimConfig { samples: 10_000, ..cfg };
    let report = coverage_experiment(&small, 0.01, 2_000)?;
    println!(
        "coverage {:.4} over {} trials (nominal {}, band [{:.4}, {:.4}])",
        report.empirical, report.trials, report.nominal, report.band_low, report.band_high
    );

    let realistic = NoiseBudget { eps_a: 0.005, eps_b: 0.02, ..budget };
    let distances: Vec<f64> = (0..21).map(|k| 5.0 * k as f64).collect();
    let fit = fit_bob_noise_law(&params, &realistic, 4.0, &distances, 200_000, 7)?;
    println!("fitted eps_a + eps_l = {:.5} (true 0.005), eps_b = {:.5} (true 0.02)", fit.intercept, fit.slope);
    Ok(())
}
