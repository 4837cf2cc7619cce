//! Finite-size key rates at a fixed distance for growing block sizes, all
//! four worst-case variants side by side.
//!
//! The tight variant takes the worst corner of the confidence region on the
//! side of the S(y:E) maximum where the estimate sits; loose always assumes
//! the smallest transmittance; lmin/lmax move the estimates themselves to the
//! edge of the region.

use cvqkd::finite_size::FiniteSizeSetup;
use cvqkd::rate_engine::DEFAULT_VA_BRACKET;
use cvqkd::{optimize_va, FiniteVariant, LinkParams, NoiseBudget, NoiseMode, ProtocolFamily, ProtocolSpec, RateModel};

fn main() -> cvqkd::Result<()> {
    let params = LinkParams::default();
    let spec = ProtocolSpec::new(ProtocolFamily::CoherentHomodyne, 0.99)?;
    let budget = NoiseBudget {
        eps_a: 0.005,
        eps_l: 0.0,
        eps_b: 5e-4,
        mode: NoiseMode::PureTrusted,
    };
    let link = params.at_distance(25.0)?;

    let asymptotic = optimize_va(&spec, &link, &budget, &RateModel::Asymptotic, DEFAULT_VA_BRACKET)?;
    println!("asymptotic K = {:.5e}", asymptotic.evaluation.key_rate);

    for total in [1e8 as u64, 1e10 as u64, 1e12 as u64] {
        let setup = FiniteSizeSetup::symmetric(total)?;
        print!("N = {total:.0e}");
        for variant in FiniteVariant::ALL {
            let model = RateModel::Finite { setup, variant };
            let k = optimize_va(&spec, &link, &budget, &model, DEFAULT_VA_BRACKET)?.evaluation.key_rate;
            print!("  {variant:<5} {k:+.4e}");
        }
        println!();
    }
    Ok(())
}
