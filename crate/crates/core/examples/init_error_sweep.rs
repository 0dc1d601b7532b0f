//! How many Gauss-Newton iterations a worse starting point costs, and how
//! the stop reasons shift.
//!
//!     cargo run --release --example init_error_sweep

use jlas::sim::{run_init_error_sweep, EstimatorKind, InitSweepConfig};

fn main() -> jlas::Result<()> {
    let config = InitSweepConfig {
        init_steps: 8,
        runs_per_step: 1000,
        ..InitSweepConfig::default()
    };
    let report = run_init_error_sweep(&config)?;
    println!("{:>8} {:>7} {:>10} {:>9} {:>9}", "init m", "iters", "converged", "singular", "exceeded");
    for (step, s) in report.series(EstimatorKind::Iterative) {
        let n = s.runs as f64;
        println!(
            "{:>8.1} {:>7.2} {:>10.3} {:>9.3} {:>9.3}",
            step.init_error_std_m,
            s.mean_iterations,
            s.n_converged as f64 / n,
            s.n_singular as f64 / n,
            s.n_exceeded as f64 / n
        );
    }
    Ok(())
}
