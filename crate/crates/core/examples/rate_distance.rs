//! Asymptotic key rate versus fibre length for the three protocol families,
//! with the modulation variance re-optimised at every distance.
//!
//! ```text
//! cargo run --release --example rate_distance
//! ```

use cvqkd::rate_engine::DEFAULT_VA_BRACKET;
use cvqkd::{
    max_distance, rate_distance_curve, DistanceGrid, LinkParams, MaxDistanceOptions, NoiseBudget, ProtocolFamily,
    ProtocolSpec, RateModel,
};

fn main() -> cvqkd::Result<()> {
    let params = LinkParams::default();
    let budget = NoiseBudget::ideal(0.01);
    let grid = DistanceGrid::List {
        distances_km: vec![1.0, 10.0, 25.0, 50.0, 100.0, 200.0, 300.0],
    };

    println!("{:>8} {:>22} {:>22} {:>22}", "km", "squeezed-homodyne", "coherent-homodyne", "coherent-heterodyne");
    let mut curves = Vec::new();
    for family in ProtocolFamily::ALL {
        let spec = ProtocolSpec::new(family, 0.95)?;
        curves.push(rate_distance_curve(&spec, &budget, &params, &RateModel::Asymptotic, &grid, DEFAULT_VA_BRACKET)?);
    }
    for i in 0..curves[0].points.len() {
        print!("{:>8.1}", curves[0].points[i].distance_km);
        for c in &curves {
            print!(" {:>22.6e}", c.points[i].key_rate);
        }
        println!();
    }

    let opts = MaxDistanceOptions::default();
    for family in ProtocolFamily::ALL {
        let spec = ProtocolSpec::new(family, 0.95)?;
        let reach = max_distance(&spec, &budget, &params, &RateModel::Asymptotic, &opts)?;
        match reach.km() {
            Some(km) => println!("{:<20} max distance {km:.1} km", family.as_str()),
            None => println!("{:<20} {reach:?}", family.as_str()),
        }
    }
    Ok(())
}
