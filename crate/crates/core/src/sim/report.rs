use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{CrlbPartition, MseRecord};
use crate::error::{Error, Result};

/// CSV column order for noise sweeps.
pub const CSV_COLUMNS: [&str; 17] = [
    "noise_sigma_m",
    "estimator",
    "runs",
    "mse_p",
    "mse_v",
    "mse_beta",
    "mse_omega",
    "crlb_p",
    "crlb_v",
    "crlb_beta",
    "crlb_omega",
    "correctness_rate",
    "n_converged",
    "n_singular",
    "n_exceeded",
    "wallclock_s",
    "flops_model",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Cfjlas,
    Iterative,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cfjlas => "cfjlas",
            Self::Iterative => "iterative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Noise,
    InitError,
}

/// Aggregates for one estimator at one sweep step.
///
/// MSEs are taken over usable runs only: successful closed-form fixes, and
/// converged iterative runs. For the closed-form estimator `n_converged`
/// counts successful fixes and `n_singular` counts runs that raised an
/// error, so the three counters always add up to `runs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub estimator: EstimatorKind,
    pub runs: usize,
    pub mse: MseRecord,
    /// Bound averaged over the step's runs.
    pub crlb: CrlbPartition,
    pub correctness_rate: f64,
    pub n_converged: usize,
    pub n_singular: usize,
    pub n_exceeded: usize,
    pub mean_iterations: f64,
    /// Summed time spent inside the estimator calls.
    pub wallclock_s: f64,
    pub flops_model: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub noise_sigma_m: f64,
    pub init_error_std_m: f64,
    pub estimators: Vec<EstimatorStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub steps: Vec<StepRecord>,
}

impl SweepReport {
    pub fn empty(kind: SweepKind) -> Self {
        Self { kind, steps: Vec::new() }
    }

    /// Stats for `estimator` at every step, in step order.
    pub fn series(&self, estimator: EstimatorKind) -> Vec<(&StepRecord, &EstimatorStats)> {
        self.steps
            .iter()
            .filter_map(|s| s.estimators.iter().find(|e| e.estimator == estimator).map(|e| (s, e)))
            .collect()
    }

    /// Same report with all wall-clock totals zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        for step in &mut out.steps {
            for e in &mut step.estimators {
                e.wallclock_s = 0.0;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Formats to 12 significant digits, then prints the shortest form.
fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the report as CSV or JSON.
///
/// CSV has one row per estimator per step with the columns of
/// [`CSV_COLUMNS`]; init-error sweeps get a leading `init_error_std_m` and a
/// trailing `mean_iterations` column. Floats carry 12 significant digits.
/// JSON is the full report with exact floats.
pub fn emit_report(report: &SweepReport, format: ReportFormat, destination: impl AsRef<Path>) -> Result<()> {
    let path = destination.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report).map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e.into(),
            })?;
            writeln!(out).map_err(io_err(path))?;
        }
        ReportFormat::Csv => write_csv(report, &mut out).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e.into(),
        })?,
    }
    out.flush().map_err(io_err(path))
}

/// CSV rendering of the report, see [`emit_report`].
pub fn write_csv<W: Write>(report: &SweepReport, writer: W) -> std::result::Result<(), csv::Error> {
    let init = report.kind == SweepKind::InitError;
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = Vec::new();
    if init {
        header.push("init_error_std_m");
    }
    header.extend(CSV_COLUMNS);
    if init {
        header.push("mean_iterations");
    }
    w.write_record(&header)?;
    for step in &report.steps {
        for e in &step.estimators {
            let mut row = Vec::with_capacity(header.len());
            if init {
                row.push(sig12(step.init_error_std_m));
            }
            row.extend([
                sig12(step.noise_sigma_m),
                e.estimator.as_str().to_string(),
                e.runs.to_string(),
                sig12(e.mse.mse_p),
                sig12(e.mse.mse_v),
                sig12(e.mse.mse_beta),
                sig12(e.mse.mse_omega),
                sig12(e.crlb.pos_bound),
                sig12(e.crlb.vel_bound),
                sig12(e.crlb.beta_bound),
                sig12(e.crlb.omega_bound),
                sig12(e.correctness_rate),
                e.n_converged.to_string(),
                e.n_singular.to_string(),
                e.n_exceeded.to_string(),
                sig12(e.wallclock_s),
                sig12(e.flops_model),
            ]);
            if init {
                row.push(sig12(e.mean_iterations));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a report written with [`ReportFormat::Json`].
pub fn load_report_json(path: impl AsRef<Path>) -> Result<SweepReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
