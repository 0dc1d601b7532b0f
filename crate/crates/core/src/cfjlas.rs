//! Closed-form joint localization and synchronization.
//!
//! The pipeline squares and differences the TOA equations into a linear
//! system in `theta = [p, v, beta, omega]` plus two intermediate variables
//! `lambda1 = omega^2 - |v|^2` and `lambda2 = beta omega - p^T v`, solves the
//! system for `theta` as an affine function of the intermediates, pins the
//! intermediates down with a pair of quadratics, picks the candidate with the
//! smallest weighted residual and finishes with a single WLS correction.
//! Complex roots of the quadratic pair also yield candidates from their real
//! parts, so a fix survives noise pushing the right root off the real line.
//!
//! ```
//! use jlas::cfjlas::estimate;
//! use jlas::measurement::sample_measurements;
//! use jlas::sim::ScenarioSpec;
//! use jlas::types::NoiseModel;
//!
//! let spec = ScenarioSpec::default_formation();
//! let scenario = spec.scenario().unwrap();
//! let truth = spec.draw_truth(&mut rand::rng()).unwrap();
//! let noise = NoiseModel::uniform(scenario.anchor_count(), 0.5).unwrap();
//! let meas = sample_measurements(&scenario, &truth, &noise, 7).unwrap();
//! let fix = estimate(&scenario, &meas).unwrap();
//! assert!((&fix.theta_refined.p - &truth.p).norm() < 10.0);
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, Stage};
use crate::measurement::{normal_step, residuals, weighted_ssr};
use crate::roots::{self, QuadraticCoefficients, RootPair};
use crate::types::{MeasurementSet, Scenario, UserState};

/// Singular-value ratio below which `A` is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// rcond guard on the refinement normal matrix.
pub const REFINE_RCOND: f64 = 1e-15;
/// Imaginary-part tolerance used when the first root solve finds nothing real.
pub const WIDENED_IMAG_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfjlasOptions {
    /// Zero-based index of the anchor all other equations are differenced
    /// against.
    pub reference_anchor: usize,
}

impl Default for CfjlasOptions {
    fn default() -> Self {
        Self { reference_anchor: 0 }
    }
}

/// `A theta = y + G [lambda1, lambda2]^T`, one row per non-reference anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub y: DVector<f64>,
}

/// Least-squares solution of the linear system as an affine function of the
/// intermediate variables: `theta = g + U [lambda1, lambda2]^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub g: DVector<f64>,
    pub u: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// Final estimate after the WLS correction.
    pub theta_refined: UserState,
    /// Closed-form estimate before the correction.
    pub theta_raw: UserState,
    /// Selected `omega^2 - |v|^2`, m^2/s^2.
    pub lambda1: f64,
    /// Selected `beta omega - p^T v`, m^2/s.
    pub lambda2: f64,
    pub candidates_considered: usize,
    /// The selected pair came from a complex root of the eliminant rather
    /// than an exact real solution.
    pub projected_root: bool,
    /// Weighted SSR of the selected raw candidate.
    pub selected_ssr: f64,
    /// Norm of the WLS correction.
    pub refinement_norm: f64,
    /// Identity weights were used because some sigma was zero.
    pub identity_weighting: bool,
}

fn check_reference(scenario: &Scenario, reference: usize) -> Result<()> {
    if reference >= scenario.anchor_count() {
        return Err(Error::InvalidValue {
            field: "reference_anchor".into(),
            reason: format!("index {reference} out of range for {} anchors", scenario.anchor_count()),
        });
    }
    Ok(())
}

/// Linearized system differenced against the first anchor.
pub fn build_linear_system(scenario: &Scenario, meas: &MeasurementSet) -> Result<LinearSystem> {
    build_linear_system_with(scenario, meas, 0)
}

/// Linearized system differenced against anchor `reference` (zero-based).
///
/// Fails with [`Error::RankDeficient`] when the smallest singular value of
/// `A` is below `1e-10` times the largest.
pub fn build_linear_system_with(
    scenario: &Scenario,
    meas: &MeasurementSet,
    reference: usize,
) -> Result<LinearSystem> {
    meas.check_against(scenario)?;
    check_reference(scenario, reference)?;
    let system = assemble(scenario, meas, reference);
    let sv = system.a.clone().singular_values();
    let largest = sv.max();
    let smallest = sv.min();
    let ratio = if largest > 0.0 { smallest / largest } else { 0.0 };
    if !(ratio >= RANK_TOLERANCE) {
        return Err(Error::RankDeficient { ratio });
    }
    Ok(system)
}

fn assemble(scenario: &Scenario, meas: &MeasurementSet, reference: usize) -> LinearSystem {
    let k = scenario.dimension();
    let m = scenario.anchor_count();
    let anchors = scenario.anchors();
    let alpha: Vec<f64> = anchors
        .iter()
        .zip(meas.taus.iter())
        .map(|(a, tau)| tau + a.clock_offset)
        .collect();

    let r = &anchors[reference];
    let (t_r, alpha_r) = (r.slot_time, alpha[reference]);
    let norm_r = r.position.norm_squared();

    let mut a = DMatrix::zeros(m - 1, 2 * k + 2);
    let mut g = DMatrix::zeros(m - 1, 2);
    let mut y = DVector::zeros(m - 1);
    let rows = (0..m).filter(|&i| i != reference);
    for (row, i) in rows.enumerate() {
        let an = &anchors[i];
        let t_i = an.slot_time;
        for j in 0..k {
            a[(row, j)] = 2.0 * (an.position[j] - r.position[j]);
            a[(row, k + j)] = 2.0 * (t_i * an.position[j] - t_r * r.position[j]);
        }
        a[(row, 2 * k)] = 2.0 * (alpha_r - alpha[i]);
        a[(row, 2 * k + 1)] = 2.0 * (t_r * alpha_r - t_i * alpha[i]);
        g[(row, 0)] = t_r * t_r - t_i * t_i;
        g[(row, 1)] = 2.0 * (t_r - t_i);
        y[row] = an.position.norm_squared() - norm_r - (alpha[i] * alpha[i] - alpha_r * alpha_r);
    }
    LinearSystem { a, g, y }
}

/// Least-squares reduction via a QR factorization of `A`.
pub fn reduce(system: &LinearSystem) -> Result<Reduction> {
    let rows = system.a.nrows();
    let n = system.a.ncols();
    if rows < n {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let mut rhs = DMatrix::zeros(rows, 3);
    rhs.column_mut(0).copy_from(&system.y);
    rhs.columns_mut(1, 2).copy_from(&system.g);

    let qr = system.a.clone().qr();
    let qt_rhs = qr.q().transpose() * rhs;
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    if !(r.diagonal().amin() > RANK_TOLERANCE * diag_max) {
        return Err(Error::RankDeficient {
            ratio: r.diagonal().amin() / diag_max,
        });
    }
    let sol = r
        .solve_upper_triangular(&qt_rhs)
        .ok_or(Error::RankDeficient { ratio: 0.0 })?;
    Ok(Reduction {
        g: sol.column(0).into_owned(),
        u: sol.columns(1, 2).into_owned(),
    })
}

/// Quadratic-form matrix with `theta^T H1 theta = omega^2 - |v|^2`.
pub fn h1(k: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(2 * k + 2, 2 * k + 2);
    for j in k..2 * k {
        h[(j, j)] = -1.0;
    }
    h[(2 * k + 1, 2 * k + 1)] = 1.0;
    h
}

/// Quadratic-form matrix with `theta^T H2 theta = 2 (beta omega - p^T v)`.
pub fn h2(k: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(2 * k + 2, 2 * k + 2);
    for j in 0..k {
        h[(j, k + j)] = -1.0;
        h[(k + j, j)] = -1.0;
    }
    h[(2 * k, 2 * k + 1)] = 1.0;
    h[(2 * k + 1, 2 * k)] = 1.0;
    h
}

fn form(x: &DVector<f64>, h: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    x.dot(&(h * y))
}

/// The two quadratics in `(lambda1, lambda2)` obtained by requiring the
/// affine estimate to reproduce the intermediate variables.
pub fn quadratic_coefficients(
    reduction: &Reduction,
    k: usize,
) -> Result<(QuadraticCoefficients, QuadraticCoefficients)> {
    let n = 2 * k + 2;
    if reduction.g.len() != n || reduction.u.nrows() != n || reduction.u.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            field: "reduction".into(),
            expected: n,
            found: reduction.g.len(),
        });
    }
    let u1 = reduction.u.column(0).into_owned();
    let u2 = reduction.u.column(1).into_owned();
    let g = &reduction.g;
    let coefficients = |h: &DMatrix<f64>, d_shift: f64, e_shift: f64| QuadraticCoefficients {
        a: form(&u1, h, &u1),
        b: 2.0 * form(&u1, h, &u2),
        c: form(&u2, h, &u2),
        d: 2.0 * form(&u1, h, g) - d_shift,
        e: 2.0 * form(&u2, h, g) - e_shift,
        f: form(g, h, g),
    };
    Ok((coefficients(&h1(k), 1.0, 0.0), coefficients(&h2(k), 0.0, 2.0)))
}

/// `theta = g + U [x, y]^T` for every root pair.
pub fn candidate_states(reduction: &Reduction, pairs: &[RootPair]) -> Result<Vec<UserState>> {
    pairs
        .iter()
        .map(|pair| {
            let theta = &reduction.g + &reduction.u * DVector::from_vec(vec![pair.x, pair.y]);
            UserState::from_vector(&theta)
        })
        .collect()
}

/// Index and weighted SSR of the candidate with the smallest weighted
/// residual; the earliest candidate wins ties.
pub fn select_root(
    scenario: &Scenario,
    meas: &MeasurementSet,
    candidates: &[UserState],
) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let ssr = weighted_ssr(&residuals(scenario, meas, c)?, &meas.noise)?.value;
        if !ssr.is_finite() {
            continue;
        }
        if best.is_none_or(|(_, b)| ssr < b) {
            best = Some((i, ssr));
        }
    }
    best.ok_or(Error::NoCandidates)
}

/// One WLS correction around `raw`; returns the corrected state and the
/// norm of the correction.
pub fn wls_refine(scenario: &Scenario, meas: &MeasurementSet, raw: &UserState) -> Result<(UserState, f64)> {
    let step = normal_step(scenario, meas, raw, REFINE_RCOND)?;
    let refined = UserState::from_vector(&(raw.to_vector() + &step.delta))?;
    Ok((refined, step.delta.norm()))
}

/// Runs the full closed-form pipeline with default options.
pub fn estimate(scenario: &Scenario, meas: &MeasurementSet) -> Result<EstimationResult> {
    estimate_with(scenario, meas, &CfjlasOptions::default())
}

pub fn estimate_with(
    scenario: &Scenario,
    meas: &MeasurementSet,
    options: &CfjlasOptions,
) -> Result<EstimationResult> {
    meas.check_against(scenario).map_err(|e| e.at(Stage::Input))?;
    check_reference(scenario, options.reference_anchor).map_err(|e| e.at(Stage::Input))?;

    // rank is checked by the QR in `reduce`
    let system = assemble(scenario, meas, options.reference_anchor);
    let reduction = reduce(&system).map_err(|e| e.at(Stage::Reduction))?;
    let (eq1, eq2) =
        quadratic_coefficients(&reduction, scenario.dimension()).map_err(|e| e.at(Stage::Reduction))?;
    let mut pairs = match roots::solve_quadratic_pair(&eq1, &eq2) {
        Err(Error::NoRealSolution) => roots::solve_quadratic_pair_with(&eq1, &eq2, WIDENED_IMAG_TOL),
        other => other,
    }
    .or_else(|e| match e {
        Error::NoRealSolution => Ok(Vec::new()),
        e => Err(e),
    })
    .map_err(|e| e.at(Stage::RootSolving))?;
    let exact = pairs.len();
    pairs.extend(
        roots::projected_pairs(&eq1, &eq2, roots::DEFAULT_IMAG_TOL).map_err(|e| e.at(Stage::RootSolving))?,
    );
    if pairs.is_empty() {
        return Err(Error::NoRealSolution.at(Stage::RootSolving));
    }

    let candidates = candidate_states(&reduction, &pairs).map_err(|e| e.at(Stage::RootSelection))?;
    let (index, selected_ssr) =
        select_root(scenario, meas, &candidates).map_err(|e| e.at(Stage::RootSelection))?;
    let raw = candidates[index].clone();
    let (refined, refinement_norm) =
        wls_refine(scenario, meas, &raw).map_err(|e| e.at(Stage::Refinement))?;

    Ok(EstimationResult {
        theta_refined: refined,
        theta_raw: raw,
        lambda1: pairs[index].x,
        lambda2: pairs[index].y,
        candidates_considered: candidates.len(),
        projected_root: index >= exact,
        selected_ssr,
        refinement_norm,
        identity_weighting: meas.noise.weights().identity_fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{forward_toa, sample_measurements};
    use crate::sim::ScenarioSpec;
    use crate::types::{AnchorNode, NoiseModel, SPEED_OF_LIGHT};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn formation() -> (ScenarioSpec, Scenario) {
        let spec = ScenarioSpec::default_formation();
        let sc = spec.scenario().unwrap();
        (spec, sc)
    }

    fn exact(sc: &Scenario, truth: &UserState) -> MeasurementSet {
        let noise = NoiseModel::uniform(sc.anchor_count(), 1.0).unwrap();
        MeasurementSet::new(forward_toa(sc, truth).unwrap(), noise).unwrap()
    }

    fn lambdas(s: &UserState) -> (f64, f64) {
        (s.omega * s.omega - s.v.norm_squared(), s.beta * s.omega - s.p.dot(&s.v))
    }

    #[test]
    fn system_shapes() {
        let (spec, sc) = formation();
        let truth = spec.draw_truth(&mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let sys = build_linear_system(&sc, &exact(&sc, &truth)).unwrap();
        assert_eq!(sys.a.shape(), (7, 6));
        assert_eq!(sys.g.shape(), (7, 2));
        assert_eq!(sys.y.len(), 7);
    }

    #[test]
    fn collinear_anchors_are_rank_deficient() {
        let anchors = (0..8)
            .map(|i| AnchorNode::new(i + 1, &[40.0 * i as f64 - 100.0, 0.0], 0.0, 0.005 * i as f64))
            .collect();
        let sc = Scenario::new(anchors, 2, SPEED_OF_LIGHT).unwrap();
        let truth = UserState::from_slices(&[10.0, 50.0], &[5.0, 0.0], 100.0, 300.0).unwrap();
        let meas = exact(&sc, &truth);
        assert!(matches!(build_linear_system(&sc, &meas), Err(Error::RankDeficient { .. })));
        let err = estimate(&sc, &meas).unwrap_err();
        assert!(matches!(err.root_cause(), Error::RankDeficient { .. }));
    }

    #[test]
    fn zero_noise_linear_identity() {
        let (spec, sc) = formation();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let truth = spec.draw_truth(&mut rng).unwrap();
            for reference in [0, 3, 7] {
                let sys = build_linear_system_with(&sc, &exact(&sc, &truth), reference).unwrap();
                let (l1, l2) = lambdas(&truth);
                let lhs = &sys.a * truth.to_vector();
                let rhs = &sys.y + &sys.g * DVector::from_vec(vec![l1, l2]);
                let scale = lhs.amax().max(rhs.amax());
                assert!((lhs - rhs).amax() <= 1e-6 * scale);
            }
        }
    }

    #[test]
    fn reduction_solves_consistent_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(9, 6, |_, _| rng.random_range(-1.0..1.0));
        let theta0 = DVector::from_fn(6, |i, _| i as f64 - 2.5);
        let g = DMatrix::from_fn(9, 2, |_, _| rng.random_range(-1.0..1.0));
        let red = reduce(&LinearSystem { a: a.clone(), g: g.clone(), y: &a * &theta0 }).unwrap();
        assert!((&red.g - &theta0).amax() < 1e-9);
        // normal equations for each column of U
        let normal = (a.transpose() * &a * &red.u - a.transpose() * &g).amax();
        assert!(normal < 1e-10);

        let zero_g = reduce(&LinearSystem { a: a.clone(), g: DMatrix::zeros(9, 2), y: &a * &theta0 }).unwrap();
        assert_eq!(zero_g.u, DMatrix::zeros(6, 2));
    }

    #[test]
    fn quadratic_forms_select_the_intermediates() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in [2, 3] {
            for _ in 0..100 {
                let theta = DVector::from_fn(2 * k + 2, |_, _| rng.random_range(-100.0..100.0));
                let s = UserState::from_vector(&theta).unwrap();
                let (l1, l2) = lambdas(&s);
                let q1 = theta.dot(&(h1(k) * &theta));
                let q2 = theta.dot(&(h2(k) * &theta));
                assert!((q1 - l1).abs() <= 1e-9 * l1.abs().max(1.0));
                assert!((q2 - 2.0 * l2).abs() <= 1e-9 * l2.abs().max(1.0));
            }
        }
    }

    #[test]
    fn empty_reduction_leaves_moved_terms() {
        for k in [2, 3] {
            let red = Reduction { g: DVector::zeros(2 * k + 2), u: DMatrix::zeros(2 * k + 2, 2) };
            let (e1, e2) = quadratic_coefficients(&red, k).unwrap();
            assert_eq!(e1, QuadraticCoefficients::new(0.0, 0.0, 0.0, -1.0, 0.0, 0.0));
            assert_eq!(e2, QuadraticCoefficients::new(0.0, 0.0, 0.0, 0.0, -2.0, 0.0));
        }
        let bad = Reduction { g: DVector::zeros(6), u: DMatrix::zeros(6, 2) };
        assert!(quadratic_coefficients(&bad, 3).is_err());
    }

    #[test]
    fn candidates_follow_the_affine_map() {
        let g = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let u = DMatrix::from_fn(6, 2, |i, j| (i + 2 * j) as f64);
        let red = Reduction { g: g.clone(), u };
        let pair = |x, y| RootPair { x, y, back_substitution_residual: 0.0 };
        let c = candidate_states(&red, &[pair(0.0, 0.0), pair(1.0, -1.0)]).unwrap();
        assert_eq!(c[0].to_vector(), g);
        assert_ne!(c[0], c[1]);
        assert!(candidate_states(&red, &[]).unwrap().is_empty());
    }

    #[test]
    fn selection_prefers_the_truth() {
        let (spec, sc) = formation();
        let truth = spec.draw_truth(&mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let noise = NoiseModel::uniform(8, 0.05).unwrap();
        let meas = sample_measurements(&sc, &truth, &noise, 9).unwrap();
        let mut far = truth.clone();
        far.p[0] += 80.0;
        assert_eq!(select_root(&sc, &meas, &[far.clone(), truth.clone()]).unwrap().0, 1);
        assert_eq!(select_root(&sc, &meas, &[far.clone()]).unwrap().0, 0);
        assert_eq!(select_root(&sc, &meas, &[truth.clone(), truth.clone()]).unwrap().0, 0);
        assert!(matches!(select_root(&sc, &meas, &[]), Err(Error::NoCandidates)));

        // uniform sigmas: weighting does not change the choice
        let unit = MeasurementSet::new(meas.taus.clone(), NoiseModel::uniform(8, 1.0).unwrap()).unwrap();
        let mut mid = truth.clone();
        mid.beta += 3.0;
        let cands = [far, mid, truth];
        assert_eq!(select_root(&sc, &meas, &cands).unwrap().0, select_root(&sc, &unit, &cands).unwrap().0);
    }

    #[test]
    fn refinement_from_truth() {
        let (spec, sc) = formation();
        let truth = spec.draw_truth(&mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let (refined, norm) = wls_refine(&sc, &exact(&sc, &truth), &truth).unwrap();
        assert!(norm < 1e-6);
        assert!((refined.to_vector() - truth.to_vector()).amax() < 1e-6);

        // with noise the correction is (J^T W J)^-1 J^T W eps
        let sigmas: Vec<f64> = (0..8).map(|i| 0.5 + 0.1 * i as f64).collect();
        let noise = NoiseModel::new(sigmas.clone()).unwrap();
        let eps = DVector::from_fn(8, |i, _| 0.3 * (i as f64 - 3.5));
        let meas = MeasurementSet::new(forward_toa(&sc, &truth).unwrap() + &eps, noise).unwrap();
        let (refined, _) = wls_refine(&sc, &meas, &truth).unwrap();
        let j = crate::measurement::design_matrix(&sc, &truth).unwrap().into_matrix();
        let w = DMatrix::from_diagonal(&DVector::from_iterator(8, sigmas.iter().map(|s| 1.0 / (s * s))));
        let expected = (j.transpose() * &w * &j).try_inverse().unwrap() * j.transpose() * &w * &eps;
        let got = refined.to_vector() - truth.to_vector();
        assert!((got - &expected).amax() <= 1e-6 * expected.amax().max(1.0));
    }

    #[test]
    fn refinement_is_one_gauss_newton_step() {
        let (spec, sc) = formation();
        let truth = spec.draw_truth(&mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let noise = NoiseModel::uniform(8, 1.0).unwrap();
        let meas = sample_measurements(&sc, &truth, &noise, 3).unwrap();
        let fix = estimate(&sc, &meas).unwrap();
        let opts = crate::iterative::IterativeOptions { max_iterations: 1, ..Default::default() };
        let one = crate::iterative::iterate_ml(&sc, &meas, &fix.theta_raw, &opts).unwrap();
        let diff = (one.state.to_vector() - fix.theta_refined.to_vector()).amax();
        assert!(diff <= 1e-10 * fix.theta_refined.to_vector().amax().max(1.0), "{diff}");
    }

    #[test]
    fn near_noiseless_fix_is_exact() {
        let (spec, sc) = formation();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for seed in 0..20 {
            let truth = spec.draw_truth(&mut rng).unwrap();
            let noise = NoiseModel::uniform(8, 1e-6).unwrap();
            let meas = sample_measurements(&sc, &truth, &noise, seed).unwrap();
            let fix = estimate(&sc, &meas).unwrap();
            assert!((fix.theta_refined.to_vector() - truth.to_vector()).amax() < 1e-3);
            assert!(!fix.projected_root);

            // the selected intermediates agree with the raw state
            let (l1, l2) = lambdas(&fix.theta_raw);
            assert!((fix.lambda1 - l1).abs() <= 1e-3 * l1.abs().max(1.0));
            assert!((fix.lambda2 - l2).abs() <= 1e-3 * l2.abs().max(1.0));
        }
    }

    #[test]
    fn translation_moves_only_the_position() {
        let (spec, sc) = formation();
        let truth = spec.draw_truth(&mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let offset = DVector::from_vec(vec![1234.0, -567.0]);
        let moved_sc = sc.translated(&offset).unwrap();
        let mut moved = truth.clone();
        moved.p += &offset;
        let a = estimate(&sc, &exact(&sc, &truth)).unwrap().theta_refined;
        let b = estimate(&moved_sc, &exact(&moved_sc, &moved)).unwrap().theta_refined;
        assert!((&b.p - &a.p - &offset).amax() < 1e-4);
        assert!((&b.v - &a.v).amax() < 1e-4);
        assert!((b.beta - a.beta).abs() < 1e-4 && (b.omega - a.omega).abs() < 1e-4);
    }

    #[test]
    fn input_errors_are_tagged() {
        let (spec, sc) = formation();
        let truth = spec.draw_truth(&mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        let short = MeasurementSet::new(
            forward_toa(&sc, &truth).unwrap().rows(0, 7).into_owned(),
            NoiseModel::uniform(7, 1.0).unwrap(),
        )
        .unwrap();
        let err = estimate(&sc, &short).unwrap_err();
        assert_eq!(err.stage(), Some(Stage::Input));
        assert!(matches!(err.root_cause(), Error::DimensionMismatch { .. }));

        let bad_ref = estimate_with(&sc, &exact(&sc, &truth), &CfjlasOptions { reference_anchor: 8 });
        assert_eq!(bad_ref.unwrap_err().stage(), Some(Stage::Input));
    }

    #[test]
    fn three_dimensional_fix() {
        let anchors = (0..9)
            .map(|i| {
                let a = i as f64 * 2.0 * std::f64::consts::PI / 9.0;
                let z = if i % 2 == 0 { 80.0 } else { -60.0 };
                AnchorNode::new(i + 1, &[400.0 * a.cos(), 300.0 * a.sin(), z + 10.0 * i as f64], 0.0, 0.005 * i as f64)
            })
            .collect();
        let sc = Scenario::new(anchors, 3, SPEED_OF_LIGHT).unwrap();
        let truth = UserState::from_slices(&[20.0, -10.0, 5.0], &[4.0, 1.0, -0.5], 1500.0, 2000.0).unwrap();
        let fix = estimate(&sc, &exact(&sc, &truth)).unwrap();
        assert!((fix.theta_refined.to_vector() - truth.to_vector()).amax() < 1e-4);
    }
}
