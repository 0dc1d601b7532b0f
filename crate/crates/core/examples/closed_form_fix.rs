//! One closed-form fix on the built-in formation.
//!
//! Draws a random clock offset and skew, simulates one TDMA round of
//! sequential TOAs with 1 m noise, and prints the raw and refined estimates
//! next to the truth.
//!
//!     cargo run --example closed_form_fix

use jlas::cfjlas::estimate;
use jlas::measurement::sample_measurements;
use jlas::sim::ScenarioSpec;
use jlas::types::{from_meter_units, NoiseModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> jlas::Result<()> {
    let spec = ScenarioSpec::default_formation();
    let scenario = spec.scenario()?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let truth = spec.draw_truth(&mut rng)?;
    let noise = NoiseModel::uniform(scenario.anchor_count(), 1.0)?;
    let meas = sample_measurements(&scenario, &truth, &noise, 11)?;

    let fix = estimate(&scenario, &meas)?;
    let c = scenario.signal_speed();
    let show = |label: &str, s: &jlas::types::UserState| -> jlas::Result<()> {
        let (beta_s, omega_ppm) = from_meter_units(s.beta, s.omega, c)?;
        println!(
            "{label:>8}: p = ({:9.3}, {:9.3}) m  v = ({:7.3}, {:7.3}) m/s  beta = {:+.6e} s  omega = {:+8.4} ppm",
            s.p[0], s.p[1], s.v[0], s.v[1], beta_s, omega_ppm
        );
        Ok(())
    };
    show("truth", &truth)?;
    show("raw", &fix.theta_raw)?;
    show("refined", &fix.theta_refined)?;
    println!(
        "{} candidate root(s), selected lambda = ({:.6e}, {:.6e}), weighted SSR {:.3}, correction {:.3}",
        fix.candidates_considered, fix.lambda1, fix.lambda2, fix.selected_ssr, fix.refinement_norm
    );
    Ok(())
}
