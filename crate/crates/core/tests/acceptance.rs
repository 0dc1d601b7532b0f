//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! process exits non-zero if any check fails.

use std::time::Instant;

use jlas::analysis::{crlb, fim, flops_cfjlas, flops_iterative, flops_per_iteration};
use jlas::cfjlas::{estimate, wls_refine};
use jlas::measurement::{design_matrix, forward_toa, sample_measurements};
use jlas::roots::solve_quartic;
use jlas::sim::{
    run_init_error_sweep, run_sweep, EstimatorChoice, EstimatorKind, InitMode, InitSweepConfig, ScenarioSpec,
    SweepConfig,
};
use jlas::types::{to_meter_units, AnchorNode, MeasurementSet, NoiseModel, Scenario, UserState, SPEED_OF_LIGHT};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Random formation: anchors scattered over a few hundred meters, slots
/// 5 ms apart, user somewhere inside with a random clock.
fn random_instance(rng: &mut ChaCha8Rng) -> (Scenario, UserState) {
    let k = if rng.random_bool(0.5) { 2 } else { 3 };
    let m = 2 * k + 3 + rng.random_range(0..3);
    loop {
        let anchors = (0..m)
            .map(|i| {
                let pos: Vec<f64> = (0..k).map(|_| rng.random_range(-500.0..500.0)).collect();
                AnchorNode::new(i + 1, &pos, rng.random_range(-50.0..50.0), 0.005 * i as f64)
            })
            .collect();
        let Ok(sc) = Scenario::new(anchors, k, SPEED_OF_LIGHT) else { continue };
        let p: Vec<f64> = (0..k).map(|_| rng.random_range(-200.0..200.0)).collect();
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (beta, omega) =
            to_meter_units(rng.random_range(-1e-5..1e-5), rng.random_range(-20.0..20.0), SPEED_OF_LIGHT).unwrap();
        return (sc, UserState::from_slices(&p, &v, beta, omega).unwrap());
    }
}

fn zero_noise_exactness() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (sc, truth) = random_instance(&mut rng);
        let noise = NoiseModel::uniform(sc.anchor_count(), 1e-9).unwrap();
        let meas = sample_measurements(&sc, &truth, &noise, seed).unwrap();
        let err = match estimate(&sc, &meas) {
            Ok(fix) => (fix.theta_refined.to_vector() - truth.to_vector()).amax(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(worst < 1e-4 && secs < 5.0, format!("max component error {worst:.2e}, {secs:.2} s"))
}

fn crlb_efficiency_and_correctness() -> (Outcome, Outcome) {
    let config = SweepConfig {
        noise_start: 0.1,
        noise_stop: 3.0,
        noise_steps: 11,
        runs_per_step: 2000,
        master_seed: 42,
        estimators: EstimatorChoice::Both,
        init_error_std: 200.0,
        init_mode: InitMode::Perturbed,
        ..SweepConfig::default()
    };
    let clock = Instant::now();
    let report = run_sweep(&config).unwrap();
    let secs = clock.elapsed().as_secs_f64();

    let mut ratios_ok = true;
    let mut ratio_range = (f64::INFINITY, f64::NEG_INFINITY);
    for (step, stats) in report.series(EstimatorKind::Cfjlas) {
        let sigma = step.noise_sigma_m;
        if ![0.1, 0.97, 1.84, 3.0].iter().any(|s| (s - sigma).abs() < 1e-9) {
            continue;
        }
        let ratios = [
            stats.mse.mse_p / stats.crlb.pos_bound,
            stats.mse.mse_v / stats.crlb.vel_bound,
            stats.mse.mse_beta / stats.crlb.beta_bound,
            stats.mse.mse_omega / stats.crlb.omega_bound,
        ];
        for r in ratios {
            ratio_range = (ratio_range.0.min(r), ratio_range.1.max(r));
            ratios_ok &= (0.85..=1.20).contains(&r);
        }
    }
    let efficiency = outcome(
        ratios_ok && secs < 60.0,
        format!("MSE/CRLB in [{:.3}, {:.3}], sweep {secs:.1} s", ratio_range.0, ratio_range.1),
    );

    let cf_min = report
        .series(EstimatorKind::Cfjlas)
        .iter()
        .map(|(_, s)| s.correctness_rate)
        .fold(f64::INFINITY, f64::min);
    let it_rates: Vec<f64> = report.series(EstimatorKind::Iterative).iter().map(|(_, s)| s.correctness_rate).collect();
    let it_min = it_rates.iter().copied().fold(f64::INFINITY, f64::min);
    let it_max = it_rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let correctness = outcome(
        cf_min >= 0.99 && it_min >= 0.80 && it_max <= 0.92,
        format!("closed form min {cf_min:.4}, iterative [{it_min:.4}, {it_max:.4}]"),
    );
    (efficiency, correctness)
}

fn stop_reason_proportions() -> Outcome {
    let config = SweepConfig {
        noise_start: 2.0,
        noise_stop: 2.0,
        noise_steps: 1,
        runs_per_step: 5000,
        master_seed: 42,
        estimators: EstimatorChoice::Iterative,
        init_error_std: 200.0,
        init_mode: InitMode::Perturbed,
        ..SweepConfig::default()
    };
    let report = run_sweep(&config).unwrap();
    let s = &report.steps[0].estimators[0];
    let n = s.runs as f64;
    let (c, g, x) = (s.n_converged as f64 / n, s.n_singular as f64 / n, s.n_exceeded as f64 / n);
    let pass = (c - 0.87).abs() <= 0.03
        && (g - 0.045).abs() <= 0.03
        && (x - 0.086).abs() <= 0.03
        && s.n_converged + s.n_singular + s.n_exceeded == 5000;
    outcome(pass, format!("converged {c:.4}, singular {g:.4}, exceeded {x:.4} of {}", s.runs))
}

fn flop_models() -> Outcome {
    let d = flops_cfjlas(2, 8);
    let l = flops_iterative(2, 8, 1);
    let pass = d == 3689 && l == 1240 && 3 * flops_per_iteration(2, 8) > d;
    outcome(pass, format!("D = {d}, L = {l}"))
}

fn companion_roots(c: [f64; 5]) -> Vec<Complex64> {
    let mut m = DMatrix::<f64>::zeros(4, 4);
    for j in 0..4 {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..4 {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().copied().collect()
}

fn quartic_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let c = [
            sign * rng.random_range(0.5..5.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
        ];
        let ours = solve_quartic(c[0], c[1], c[2], c[3], c[4]).unwrap();
        let mut oracle = companion_roots(c);
        for z in ours {
            let (i, dist) = oracle
                .iter()
                .enumerate()
                .map(|(i, w)| (i, (z - w).norm() / w.norm().max(1.0)))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            worst = worst.max(dist);
            oracle.remove(i);
        }
    }
    outcome(worst < 1e-7, format!("max matched root distance {worst:.2e}"))
}

fn jacobian_and_fim() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let step = 1e-4;
    let mut worst: f64 = 0.0;
    let mut fim_ok = true;
    for _ in 0..100 {
        let (sc, truth) = random_instance(&mut rng);
        let j = design_matrix(&sc, &truth).unwrap().into_matrix();
        let theta = truth.to_vector();
        for col in 0..theta.len() {
            let mut hi = theta.clone();
            let mut lo = theta.clone();
            hi[col] += step;
            lo[col] -= step;
            let h_hi = forward_toa(&sc, &UserState::from_vector(&hi).unwrap()).unwrap();
            let h_lo = forward_toa(&sc, &UserState::from_vector(&lo).unwrap()).unwrap();
            let fd = (h_hi - h_lo) / (2.0 * step);
            worst = worst.max((fd - j.column(col)).amax());
        }
        let sigmas: Vec<f64> = (0..sc.anchor_count()).map(|_| rng.random_range(0.1..3.0)).collect();
        let f = fim(&sc, &truth, &NoiseModel::new(sigmas).unwrap()).unwrap();
        let min_eig = f.clone().symmetric_eigenvalues().min();
        fim_ok &= f == f.transpose() && min_eig >= -1e-9 * f.amax();
    }
    outcome(worst < 1e-5 && fim_ok, format!("max |J - J_fd| {worst:.2e}, FIM symmetric PSD: {fim_ok}"))
}

fn refinement_optimality() -> Outcome {
    let spec = ScenarioSpec::default_formation();
    let sc = spec.scenario().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let truth = spec.draw_truth(&mut rng).unwrap();
    let m = sc.anchor_count();

    // identity for fixed draws
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let sigmas: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..2.0)).collect();
        let eps = DVector::from_fn(m, |i, _| sigmas[i] * rng.random_range(-2.0..2.0));
        let noise = NoiseModel::new(sigmas.clone()).unwrap();
        let meas = MeasurementSet::new(forward_toa(&sc, &truth).unwrap() + &eps, noise).unwrap();
        let (est, _) = wls_refine(&sc, &meas, &truth).unwrap();
        let j = design_matrix(&sc, &truth).unwrap().into_matrix();
        let w = DMatrix::from_diagonal(&DVector::from_iterator(m, sigmas.iter().map(|s| 1.0 / (s * s))));
        let predicted = (j.transpose() * &w * &j).try_inverse().unwrap() * j.transpose() * &w * &eps;
        worst = worst.max((est.to_vector() - truth.to_vector() - predicted).amax());
    }

    // empirical covariance against the bound
    let runs = 5000;
    let noise = NoiseModel::uniform(m, 0.5).unwrap();
    let bound = crlb(&fim(&sc, &truth, &noise).unwrap()).unwrap();
    let errors: Vec<DVector<f64>> = (0..runs)
        .map(|seed| {
            let meas = sample_measurements(&sc, &truth, &noise, seed).unwrap();
            estimate(&sc, &meas).unwrap().theta_refined.to_vector() - truth.to_vector()
        })
        .collect();
    let n = bound.nrows();
    let mean = errors.iter().fold(DVector::zeros(n), |acc, e| acc + e) / runs as f64;
    let mut worst_rel: f64 = 0.0;
    for i in 0..n {
        let var = errors.iter().map(|e| (e[i] - mean[i]).powi(2)).sum::<f64>() / (runs - 1) as f64;
        worst_rel = worst_rel.max((var / bound[(i, i)] - 1.0).abs());
    }
    outcome(
        worst < 1e-6 && worst_rel <= 0.10,
        format!("identity error {worst:.2e}, worst covariance diagonal off by {:.1}%", 100.0 * worst_rel),
    )
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx = rx.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy = ry.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    cov / (sx * sy)
}

fn init_error_complexity() -> Outcome {
    let config = InitSweepConfig {
        sigma: 2.0,
        init_start: 10.0,
        init_stop: 200.0,
        init_steps: 20,
        runs_per_step: 2000,
        master_seed: 42,
        ..InitSweepConfig::default()
    };
    let report = run_init_error_sweep(&config).unwrap();
    let it = report.series(EstimatorKind::Iterative);
    let cf = report.series(EstimatorKind::Cfjlas);
    let init: Vec<f64> = it.iter().map(|(s, _)| s.init_error_std_m).collect();
    let iters: Vec<f64> = it.iter().map(|(_, e)| e.mean_iterations).collect();
    let rho = spearman(&init, &iters);
    let (t_it, t_cf) = (it.last().unwrap().1.wallclock_s, cf.last().unwrap().1.wallclock_s);
    outcome(
        rho > 0.9 && t_it > t_cf,
        format!(
            "Spearman {rho:.3}, mean iterations {:.2} -> {:.2}, time at 200 m {t_it:.3} s vs {t_cf:.3} s",
            iters[0],
            iters[iters.len() - 1]
        ),
    )
}

fn main() {
    let (efficiency, correctness) = crlb_efficiency_and_correctness();
    let results = [
        ("1 zero-noise exactness", zero_noise_exactness()),
        ("2 CRLB efficiency", efficiency),
        ("3 correctness rates", correctness),
        ("4 stop-reason proportions", stop_reason_proportions()),
        ("5 flop models", flop_models()),
        ("6 quartic vs companion matrix", quartic_oracle()),
        ("7 Jacobian and FIM", jacobian_and_fim()),
        ("8 refinement optimality", refinement_optimality()),
        ("9 iterations vs initial error", init_error_complexity()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        println!("{} criterion {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
