//! Noise sweep comparing the closed form with Gauss-Newton from a 200 m
//! initial error. Writes `noise_sweep.csv` into the working directory.
//!
//!     cargo run --release --example noise_sweep

use jlas::sim::{emit_report, run_sweep, EstimatorKind, InitMode, ReportFormat, SweepConfig};

fn main() -> jlas::Result<()> {
    let config = SweepConfig {
        runs_per_step: 1000,
        init_mode: InitMode::Perturbed,
        ..SweepConfig::default()
    };
    let report = run_sweep(&config)?;
    println!("{:>6} {:>10} {:>8} {:>10} {:>8}", "sigma", "cf MSE/B", "cf ok", "gn MSE/B", "gn ok");
    let cf = report.series(EstimatorKind::Cfjlas);
    let gn = report.series(EstimatorKind::Iterative);
    for ((step, a), (_, b)) in cf.iter().zip(&gn) {
        println!(
            "{:>6.2} {:>10.3} {:>8.4} {:>10.3} {:>8.4}",
            step.noise_sigma_m,
            a.mse.mse_p / a.crlb.pos_bound,
            a.correctness_rate,
            b.mse.mse_p / b.crlb.pos_bound,
            b.correctness_rate
        );
    }
    emit_report(&report, ReportFormat::Csv, "noise_sweep.csv")
}
