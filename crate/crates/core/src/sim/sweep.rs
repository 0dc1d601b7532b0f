use std::time::Instant;

use nalgebra::DVector;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{EstimatorKind, EstimatorStats, StepRecord, SweepKind, SweepReport};
use super::scenario::ScenarioSpec;
use crate::analysis::{self, CrlbPartition, MseRecord, CORRECTNESS_FACTOR};
use crate::cfjlas;
use crate::error::{Error, Result};
use crate::iterative::{iterate_ml, IterativeOptions, StopReason};
use crate::measurement::sample_measurements_with;
use crate::types::{NoiseModel, Scenario, UserState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Cfjlas,
    Iterative,
    Both,
}

impl EstimatorChoice {
    fn cfjlas(self) -> bool {
        matches!(self, Self::Cfjlas | Self::Both)
    }

    fn iterative(self) -> bool {
        matches!(self, Self::Iterative | Self::Both)
    }
}

/// How the iterative baseline is started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// At the true state.
    GroundTruth,
    /// At the true position plus isotropic Gaussian error; velocity, clock
    /// offset and skew start at zero.
    Perturbed,
}

/// Monte-Carlo sweep over measurement noise levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub scenario: ScenarioSpec,
    pub noise_start: f64,
    pub noise_stop: f64,
    pub noise_steps: usize,
    pub runs_per_step: usize,
    pub master_seed: u64,
    pub estimators: EstimatorChoice,
    /// Per-axis standard deviation of the initial position error, m.
    pub init_error_std: f64,
    pub init_mode: InitMode,
    pub iterative: IterativeOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSpec::default_formation(),
            noise_start: 0.1,
            noise_stop: 3.0,
            noise_steps: 11,
            runs_per_step: 2000,
            master_seed: 42,
            estimators: EstimatorChoice::Both,
            init_error_std: 200.0,
            init_mode: InitMode::GroundTruth,
            iterative: IterativeOptions::default(),
        }
    }
}

/// Monte-Carlo sweep over the initial position error of the iterative
/// baseline at a fixed noise level. Both estimators always run.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSweepConfig {
    pub scenario: ScenarioSpec,
    pub sigma: f64,
    pub init_start: f64,
    pub init_stop: f64,
    pub init_steps: usize,
    pub runs_per_step: usize,
    pub master_seed: u64,
    pub iterative: IterativeOptions,
}

impl Default for InitSweepConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSpec::default_formation(),
            sigma: 2.0,
            init_start: 10.0,
            init_stop: 200.0,
            init_steps: 20,
            runs_per_step: 2000,
            master_seed: 42,
            iterative: IterativeOptions::default(),
        }
    }
}

/// Evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Generator for one run. Each `(step, run)` pair gets its own ChaCha
/// stream under the master seed, so results do not depend on scheduling.
pub fn run_rng(master_seed: u64, step: usize, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((step as u64) << 32) | run as u64);
    rng
}

struct Plan<'a> {
    kind: SweepKind,
    spec: &'a ScenarioSpec,
    scenario: Scenario,
    points: Vec<(f64, f64)>,
    runs: usize,
    seed: u64,
    estimators: EstimatorChoice,
    init_mode: InitMode,
    iterative: IterativeOptions,
}

struct CfjlasRun {
    sq_errors: Option<[f64; 4]>,
    elapsed: f64,
}

struct IterativeRun {
    sq_errors: [f64; 4],
    stop_reason: StopReason,
    iterations: usize,
    elapsed: f64,
}

struct RunOutcome {
    crlb: CrlbPartition,
    cfjlas: Option<CfjlasRun>,
    iterative: Option<IterativeRun>,
}

fn perturbed_start(truth: &UserState, std: f64, rng: &mut ChaCha8Rng) -> Result<UserState> {
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidValue {
        field: "init_error_std".into(),
        reason: e.to_string(),
    })?;
    let k = truth.dimension();
    let p = DVector::from_iterator(k, truth.p.iter().map(|x| x + normal.sample(rng)));
    Ok(UserState {
        p,
        v: DVector::zeros(k),
        beta: 0.0,
        omega: 0.0,
    })
}

fn one_run(plan: &Plan, step: usize, run: usize) -> Result<RunOutcome> {
    let (sigma, init_std) = plan.points[step];
    let mut rng = run_rng(plan.seed, step, run);
    let truth = plan.spec.draw_truth(&mut rng)?;
    let noise = NoiseModel::uniform(plan.scenario.anchor_count(), sigma)?;
    let meas = sample_measurements_with(&plan.scenario, &truth, &noise, &mut rng)?;
    // drawn unconditionally to keep the stream layout fixed
    let start = perturbed_start(&truth, init_std, &mut rng)?;

    let crlb = if sigma > 0.0 {
        let f = analysis::fim(&plan.scenario, &truth, &noise)?;
        analysis::partition_crlb(&analysis::crlb(&f)?, plan.scenario.dimension())?
    } else {
        CrlbPartition::default()
    };

    let cfjlas = plan.estimators.cfjlas().then(|| {
        let clock = Instant::now();
        let result = cfjlas::estimate(&plan.scenario, &meas);
        let elapsed = clock.elapsed().as_secs_f64();
        CfjlasRun {
            sq_errors: result
                .ok()
                .map(|r| analysis::squared_errors(&truth, &r.theta_refined)),
            elapsed,
        }
    });

    let iterative = if plan.estimators.iterative() {
        let initial = match plan.init_mode {
            InitMode::GroundTruth => truth.clone(),
            InitMode::Perturbed => start,
        };
        let clock = Instant::now();
        let result = iterate_ml(&plan.scenario, &meas, &initial, &plan.iterative)?;
        let elapsed = clock.elapsed().as_secs_f64();
        Some(IterativeRun {
            sq_errors: analysis::squared_errors(&truth, &result.state),
            stop_reason: result.stop_reason,
            iterations: result.iterations_used,
            elapsed,
        })
    } else {
        None
    };
    Ok(RunOutcome { crlb, cfjlas, iterative })
}

#[derive(Default)]
struct Accumulator {
    runs: usize,
    usable: usize,
    sums: [f64; 4],
    correct: usize,
    n_converged: usize,
    n_singular: usize,
    n_exceeded: usize,
    iterations: usize,
    wallclock: f64,
}

impl Accumulator {
    fn add(&mut self, sq: Option<[f64; 4]>, pos_bound: f64, elapsed: f64) {
        self.runs += 1;
        self.wallclock += elapsed;
        if let Some(sq) = sq {
            self.usable += 1;
            for (s, x) in self.sums.iter_mut().zip(sq) {
                *s += x;
            }
            if sq[0] < CORRECTNESS_FACTOR * pos_bound {
                self.correct += 1;
            }
        }
    }

    fn finish(self, estimator: EstimatorKind, crlb: CrlbPartition, k: u64, m: u64) -> EstimatorStats {
        let usable = self.usable as f64;
        let mse = if self.usable == 0 {
            MseRecord::default()
        } else {
            MseRecord {
                mse_p: self.sums[0] / usable,
                mse_v: self.sums[1] / usable,
                mse_beta: self.sums[2] / usable,
                mse_omega: self.sums[3] / usable,
                run_count: self.usable,
            }
        };
        let runs = self.runs.max(1) as f64;
        let mean_iterations = self.iterations as f64 / runs;
        let flops_model = match estimator {
            EstimatorKind::Cfjlas => analysis::flops_cfjlas(k, m) as f64,
            EstimatorKind::Iterative => mean_iterations * analysis::flops_per_iteration(k, m) as f64,
        };
        EstimatorStats {
            estimator,
            runs: self.runs,
            mse,
            crlb,
            correctness_rate: self.correct as f64 / runs,
            n_converged: self.n_converged,
            n_singular: self.n_singular,
            n_exceeded: self.n_exceeded,
            mean_iterations,
            wallclock_s: self.wallclock,
            flops_model,
        }
    }
}

fn aggregate(plan: &Plan, step: usize, outcomes: Vec<RunOutcome>) -> StepRecord {
    let (sigma, init_std) = plan.points[step];
    let n = outcomes.len().max(1) as f64;
    let mut crlb = CrlbPartition::default();
    let mut cf = Accumulator::default();
    let mut it = Accumulator::default();
    for o in &outcomes {
        crlb.pos_bound += o.crlb.pos_bound / n;
        crlb.vel_bound += o.crlb.vel_bound / n;
        crlb.beta_bound += o.crlb.beta_bound / n;
        crlb.omega_bound += o.crlb.omega_bound / n;
        if let Some(c) = &o.cfjlas {
            cf.add(c.sq_errors, o.crlb.pos_bound, c.elapsed);
            match c.sq_errors {
                Some(_) => cf.n_converged += 1,
                None => cf.n_singular += 1,
            }
        }
        if let Some(r) = &o.iterative {
            let converged = r.stop_reason == StopReason::Converged;
            it.add(converged.then_some(r.sq_errors), o.crlb.pos_bound, r.elapsed);
            it.iterations += r.iterations;
            match r.stop_reason {
                StopReason::Converged => it.n_converged += 1,
                StopReason::SingularMatrix => it.n_singular += 1,
                StopReason::IterationCountExceeded => it.n_exceeded += 1,
            }
        }
    }
    let k = plan.scenario.dimension() as u64;
    let m = plan.scenario.anchor_count() as u64;
    let mut estimators = Vec::new();
    if plan.estimators.cfjlas() {
        estimators.push(cf.finish(EstimatorKind::Cfjlas, crlb, k, m));
    }
    if plan.estimators.iterative() {
        estimators.push(it.finish(EstimatorKind::Iterative, crlb, k, m));
    }
    StepRecord {
        noise_sigma_m: sigma,
        init_error_std_m: init_std,
        estimators,
    }
}

fn execute(plan: Plan) -> Result<SweepReport> {
    let mut steps = Vec::with_capacity(plan.points.len());
    for step in 0..plan.points.len() {
        let outcomes = (0..plan.runs)
            .into_par_iter()
            .map(|run| one_run(&plan, step, run))
            .collect::<Result<Vec<_>>>()?;
        steps.push(aggregate(&plan, step, outcomes));
    }
    Ok(SweepReport {
        kind: plan.kind,
        steps,
    })
}

fn check_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidValue {
            field: field.into(),
            reason: format!("must be finite and non-negative, got {value}"),
        })
    }
}

/// Runs a noise sweep. Estimator failures are counted, never fatal.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    check_positive("noise_start", config.noise_start)?;
    check_positive("noise_stop", config.noise_stop)?;
    check_positive("init_error_std", config.init_error_std)?;
    if config.noise_start > config.noise_stop {
        return Err(Error::InvalidValue {
            field: "noise_start".into(),
            reason: "must not exceed noise_stop".into(),
        });
    }
    if config.runs_per_step == 0 {
        return Err(Error::InvalidValue {
            field: "runs_per_step".into(),
            reason: "at least one run per step".into(),
        });
    }
    let points = linspace(config.noise_start, config.noise_stop, config.noise_steps)
        .into_iter()
        .map(|s| (s, config.init_error_std))
        .collect();
    execute(Plan {
        kind: SweepKind::Noise,
        spec: &config.scenario,
        scenario: config.scenario.scenario()?,
        points,
        runs: config.runs_per_step,
        seed: config.master_seed,
        estimators: config.estimators,
        init_mode: config.init_mode,
        iterative: config.iterative,
    })
}

/// Runs an initial-error sweep for the iterative baseline, with the
/// closed-form estimator alongside for timing comparison.
pub fn run_init_error_sweep(config: &InitSweepConfig) -> Result<SweepReport> {
    check_positive("sigma", config.sigma)?;
    check_positive("init_start", config.init_start)?;
    check_positive("init_stop", config.init_stop)?;
    if config.init_start > config.init_stop {
        return Err(Error::InvalidValue {
            field: "init_start".into(),
            reason: "must not exceed init_stop".into(),
        });
    }
    if config.runs_per_step == 0 {
        return Err(Error::InvalidValue {
            field: "runs_per_step".into(),
            reason: "at least one run per step".into(),
        });
    }
    let points = linspace(config.init_start, config.init_stop, config.init_steps)
        .into_iter()
        .map(|e| (config.sigma, e))
        .collect();
    execute(Plan {
        kind: SweepKind::InitError,
        spec: &config.scenario,
        scenario: config.scenario.scenario()?,
        points,
        runs: config.runs_per_step,
        seed: config.master_seed,
        estimators: EstimatorChoice::Both,
        init_mode: InitMode::Perturbed,
        iterative: config.iterative,
    })
}
