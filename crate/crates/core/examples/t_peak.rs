//! Eve's Holevo information at fixed excess noise is not monotone in the
//! transmittance. This example finds its maximum and prints S(y:E) on both
//! sides of it.

use cvqkd::gaussian_info::{holevo_bound, ChannelState};
use cvqkd::{find_t_peak, PeakSearch, ProtocolFamily};

fn main() -> cvqkd::Result<()> {
    let (eta, nu_e, eps, va) = (0.6, 0.1, 0.005, 20.0);
    let family = ProtocolFamily::CoherentHomodyne;

    let peak = match find_t_peak(family, va, eta, nu_e, eps)? {
        PeakSearch::Interior(p) => p,
        PeakSearch::Monotone { increasing } => {
            println!("no interior maximum (increasing: {increasing})");
            return Ok(());
        }
    };
    println!("T_peak = {:.5}  t_peak = {:.5}  S_max = {:.6}", peak.transmittance, peak.t_peak, peak.s_ye);

    for scale in [0.25, 0.5, 0.9, 1.0, 1.1, 1.3] {
        let t = (peak.transmittance * scale).min(1.0);
        let state = ChannelState {
            transmittance: t,
            eta,
            trusted_noise: nu_e,
            epsilon: eps,
        };
        println!("T = {t:.4}  S(y:E) = {:.6}", holevo_bound(family, va, &state)?.s_ye);
    }
    Ok(())
}
