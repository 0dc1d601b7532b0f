//! Cramer-Rao bounds for the built-in formation at a few noise levels.
//!
//!     cargo run --example crlb_bounds

use jlas::analysis::{crlb, fim, partition_crlb};
use jlas::sim::ScenarioSpec;
use jlas::types::NoiseModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jlas::Result<()> {
    let spec = ScenarioSpec::default_formation();
    let scenario = spec.scenario()?;
    let truth = spec.draw_truth(&mut ChaCha8Rng::seed_from_u64(5))?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "sigma", "pos m^2", "vel m^2/s^2", "beta m^2", "omega");
    for sigma in [0.1, 0.5, 1.0, 2.0, 3.0] {
        let noise = NoiseModel::uniform(scenario.anchor_count(), sigma)?;
        let bound = partition_crlb(&crlb(&fim(&scenario, &truth, &noise)?)?, scenario.dimension())?;
        println!(
            "{sigma:>6.2} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
            bound.pos_bound, bound.vel_bound, bound.beta_bound, bound.omega_bound
        );
    }
    Ok(())
}
