//! A three-dimensional formation loaded from TOML, solved once in closed form.
//!
//!     cargo run --example custom_scenario_3d

use jlas::cfjlas::estimate;
use jlas::measurement::sample_measurements;
use jlas::sim::ScenarioSpec;
use jlas::types::NoiseModel;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jlas::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/formation_3d.toml");
    let spec = ScenarioSpec::load(path)?;
    let scenario = spec.scenario()?;
    let truth = spec.draw_truth(&mut ChaCha8Rng::seed_from_u64(17))?;
    let noise = NoiseModel::uniform(scenario.anchor_count(), 0.5)?;
    let meas = sample_measurements(&scenario, &truth, &noise, 1)?;
    let fix = estimate(&scenario, &meas)?;
    println!("{} anchors in {}D", scenario.anchor_count(), scenario.dimension());
    println!("true position    {:.3?}", truth.p.as_slice());
    println!("refined position {:.3?}", fix.theta_refined.p.as_slice());
    println!("true velocity    {:.3?}", truth.v.as_slice());
    println!("refined velocity {:.3?}", fix.theta_refined.v.as_slice());
    Ok(())
}
