//! Scenario construction, seeded Monte-Carlo sweeps and report output.

mod report;
mod scenario;
mod sweep;

pub use report::{
    emit_report, load_report_json, write_csv, EstimatorKind, EstimatorStats, ReportFormat, StepRecord,
    SweepKind, SweepReport, CSV_COLUMNS,
};
pub use scenario::{default_scenario, load_scenario, AnchorSpec, ScenarioSpec, UserSpec};
pub use sweep::{
    linspace, run_init_error_sweep, run_rng, run_sweep, EstimatorChoice, InitMode, InitSweepConfig,
    SweepConfig,
};
