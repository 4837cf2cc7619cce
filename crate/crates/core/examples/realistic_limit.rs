//! Bob-side noise referred to the channel input grows as ε_b/(ηT), which
//! caps the distance however good the reconciliation is. Treating that noise
//! as trusted removes the cap.

use cvqkd::rate_engine::DEFAULT_VA_BRACKET;
use cvqkd::{
    max_distance, optimize_va, LinkParams, MaxDistanceOptions, NoiseBudget, NoiseMode, ProtocolFamily, ProtocolSpec,
    RateModel,
};

fn main() -> cvqkd::Result<()> {
    let params = LinkParams::default();
    let spec = ProtocolSpec::new(ProtocolFamily::CoherentHomodyne, 0.99)?;
    let base = NoiseBudget {
        eps_a: 0.005,
        eps_l: 0.0,
        eps_b: 5e-4,
        mode: NoiseMode::Realistic,
    };
    let opts = MaxDistanceOptions::default();

    for mode in [NoiseMode::Ideal, NoiseMode::Realistic, NoiseMode::PureTrusted] {
        let budget = base.with_mode(mode);
        let reach = max_distance(&spec, &budget, &params, &RateModel::Asymptotic, &opts)?;
        let at_50 = optimize_va(&spec, &params.at_distance(50.0)?, &budget, &RateModel::Asymptotic, DEFAULT_VA_BRACKET)?;
        println!(
            "{:<13} K(50 km) = {:.4e} at V_A = {:6.3}   reach {:?}",
            mode.as_str(),
            at_50.evaluation.key_rate,
            at_50.va,
            reach
        );
    }
    Ok(())
}
