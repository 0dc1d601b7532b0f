//! Gauss-Newton from a good and a bad starting point on the same data.
//!
//!     cargo run --example iterative_baseline

use jlas::iterative::{iterate_ml, IterativeOptions};
use jlas::measurement::sample_measurements;
use jlas::sim::ScenarioSpec;
use jlas::types::{NoiseModel, UserState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jlas::Result<()> {
    let spec = ScenarioSpec::default_formation();
    let scenario = spec.scenario()?;
    let truth = spec.draw_truth(&mut ChaCha8Rng::seed_from_u64(3))?;
    let noise = NoiseModel::uniform(scenario.anchor_count(), 1.0)?;
    let meas = sample_measurements(&scenario, &truth, &noise, 9)?;

    for offset in [5.0, 50.0, 400.0] {
        let start = UserState::from_slices(&[truth.p[0] + offset, truth.p[1] - offset], &[0.0, 0.0], 0.0, 0.0)?;
        let fit = iterate_ml(&scenario, &meas, &start, &IterativeOptions::default())?;
        let err = (&fit.state.p - &truth.p).norm();
        println!(
            "start off by {offset:>5.0} m per axis: {:?} after {} iteration(s), position error {err:.3} m",
            fit.stop_reason, fit.iterations_used
        );
    }
    Ok(())
}
