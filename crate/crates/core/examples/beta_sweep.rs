use cvqkd::rate_engine::beta_improvement_sweep;
use cvqkd::{LinkParams, MaxDistanceOptions, ProtocolFamily};

/// Distance gained by better reconciliation, for a few constant noise levels.
fn main() -> cvqkd::Result<()> {
    let rows = beta_improvement_sweep(
        ProtocolFamily::CoherentHomodyne,
        &[0.001, 0.01, 0.05],
        (0.95, 0.99),
        &LinkParams::default(),
        &MaxDistanceOptions::default(),
    )?;
    println!("{:>8} {:>12} {:>12} {:>10}", "eps", "beta=0.95", "beta=0.99", "gain km");
    for r in rows {
        let km = |m: cvqkd::MaxDistance| m.km().map_or("-".to_string(), |k| format!("{k:.1}"));
        let gain = r.delta_km.map_or("-".to_string(), |d| format!("{d:.1}"));
        println!("{:>8} {:>12} {:>12} {:>10}", r.eps, km(r.max_low), km(r.max_high), gain);
    }
    Ok(())
}
