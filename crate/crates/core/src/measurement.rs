//! Forward sequential-TOA model, noise sampling, residuals and the Jacobian.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::inverse_with_rcond;
use crate::types::{MeasurementSet, NoiseModel, Scenario, UserState};

/// Ranges shorter than this leave the line of sight undefined.
pub const MIN_RANGE: f64 = 1e-9;

/// `h(theta)`: element i is `|p + v t_i - p_i| + beta + omega t_i - beta_i`.
pub fn forward_toa(scenario: &Scenario, state: &UserState) -> Result<DVector<f64>> {
    scenario.check_state(state)?;
    Ok(forward_unchecked(scenario, state))
}

fn forward_unchecked(scenario: &Scenario, state: &UserState) -> DVector<f64> {
    DVector::from_iterator(
        scenario.anchor_count(),
        scenario.anchors().iter().map(|a| {
            let t = a.slot_time;
            let range = (&state.p + &state.v * t - &a.position).norm();
            range + state.beta + state.omega * t - a.clock_offset
        }),
    )
}

/// Noisy measurements drawn with a ChaCha8 generator seeded from `seed`.
pub fn sample_measurements(
    scenario: &Scenario,
    state: &UserState,
    noise: &NoiseModel,
    seed: u64,
) -> Result<MeasurementSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_measurements_with(scenario, state, noise, &mut rng)
}

/// Same as [`sample_measurements`] but draws from a caller-owned generator.
pub fn sample_measurements_with<R: Rng + ?Sized>(
    scenario: &Scenario,
    state: &UserState,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<MeasurementSet> {
    let clean = forward_toa(scenario, state)?;
    if noise.len() != clean.len() {
        return Err(Error::DimensionMismatch {
            field: "noise.sigmas".into(),
            expected: clean.len(),
            found: noise.len(),
        });
    }
    let taus = DVector::from_iterator(
        clean.len(),
        clean.iter().zip(noise.sigmas()).map(|(h, s)| {
            let z: f64 = StandardNormal.sample(rng);
            h + s * z
        }),
    );
    MeasurementSet::new(taus, noise.clone())
}

/// `r = tau_hat - h(state)`.
pub fn residuals(scenario: &Scenario, meas: &MeasurementSet, state: &UserState) -> Result<DVector<f64>> {
    meas.check_against(scenario)?;
    scenario.check_state(state)?;
    Ok(&meas.taus - forward_unchecked(scenario, state))
}

/// A weighted sum of squared residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ssr {
    pub value: f64,
    /// Identity weights were used because some sigma was zero.
    pub identity_fallback: bool,
}

/// `r^T C^-1 r`.
pub fn weighted_ssr(r: &DVector<f64>, noise: &NoiseModel) -> Result<Ssr> {
    if r.len() != noise.len() {
        return Err(Error::LengthMismatch {
            left: r.len(),
            right: noise.len(),
        });
    }
    let w = noise.weights();
    let value = r.iter().zip(w.diag.iter()).map(|(x, w)| w * x * x).sum();
    Ok(Ssr {
        value,
        identity_fallback: w.identity_fallback,
    })
}

/// Jacobian of `h` with respect to `[p, v, beta, omega]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    matrix: DMatrix<f64>,
    los: Vec<DVector<f64>>,
}

impl DesignMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Unit line-of-sight vectors from the user toward each anchor.
    pub fn los(&self) -> &[DVector<f64>] {
        &self.los
    }
}

/// Row i is `[-l_i^T, -l_i^T t_i, 1, t_i]` with
/// `l_i = (p_i - p - v t_i) / |p_i - p - v t_i|`.
pub fn design_matrix(scenario: &Scenario, state: &UserState) -> Result<DesignMatrix> {
    scenario.check_state(state)?;
    let k = scenario.dimension();
    let m = scenario.anchor_count();
    let mut matrix = DMatrix::zeros(m, 2 * k + 2);
    let mut los = Vec::with_capacity(m);
    for (i, a) in scenario.anchors().iter().enumerate() {
        let t = a.slot_time;
        let d = &a.position - &state.p - &state.v * t;
        let range = d.norm();
        // NaN ranges fall through to the caller's conditioning check.
        if range < MIN_RANGE {
            return Err(Error::ZeroRange { anchor: a.id });
        }
        let l = d / range;
        for j in 0..k {
            matrix[(i, j)] = -l[j];
            matrix[(i, k + j)] = -l[j] * t;
        }
        matrix[(i, 2 * k)] = 1.0;
        matrix[(i, 2 * k + 1)] = t;
        los.push(l);
    }
    Ok(DesignMatrix { matrix, los })
}

/// One weighted Gauss-Newton increment
/// `(J^T W J)^-1 J^T W (tau_hat - h(state))` with J taken at `state`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalStep {
    pub delta: DVector<f64>,
    /// Reciprocal 1-norm condition number of `J^T W J`.
    pub rcond: f64,
}

/// Fails with [`Error::SingularNormalMatrix`] when rcond is below
/// `rcond_threshold` (or not a number).
pub fn normal_step(
    scenario: &Scenario,
    meas: &MeasurementSet,
    state: &UserState,
    rcond_threshold: f64,
) -> Result<NormalStep> {
    let r = residuals(scenario, meas, state)?;
    let j = design_matrix(scenario, state)?.into_matrix();
    let w = meas.noise.weights().diag;
    let mut jw = j.transpose();
    for (mut col, wi) in jw.column_iter_mut().zip(w.iter()) {
        col *= *wi;
    }
    let normal = &jw * &j;
    let (inverse, rcond) = inverse_with_rcond(&normal);
    match inverse {
        Some(inv) if rcond >= rcond_threshold => Ok(NormalStep {
            delta: inv * (jw * r),
            rcond,
        }),
        _ => Err(Error::SingularNormalMatrix { rcond }),
    }
}
