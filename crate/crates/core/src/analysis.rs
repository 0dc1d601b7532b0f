//! Fisher information, Cramér-Rao bounds, error metrics and flop models.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::inverse_with_rcond;
use crate::measurement::design_matrix;
use crate::types::{NoiseModel, Scenario, UserState};

/// FIM inversion guard.
pub const FIM_RCOND: f64 = 1e-12;

/// Default multiple of the position bound used to call a fix correct
/// (3 sigma).
pub const CORRECTNESS_FACTOR: f64 = 9.0;

/// Diagonal CRLB blocks for each parameter group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CrlbPartition {
    /// m^2
    pub pos_bound: f64,
    /// (m/s)^2
    pub vel_bound: f64,
    /// m^2
    pub beta_bound: f64,
    /// (m/s)^2
    pub omega_bound: f64,
}

/// Mean squared errors over a batch of runs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MseRecord {
    pub mse_p: f64,
    pub mse_v: f64,
    pub mse_beta: f64,
    pub mse_omega: f64,
    pub run_count: usize,
}

/// `F = J^T W J` with J taken at the true state.
pub fn fim(scenario: &Scenario, truth: &UserState, noise: &NoiseModel) -> Result<DMatrix<f64>> {
    if noise.len() != scenario.anchor_count() {
        return Err(Error::DimensionMismatch {
            field: "noise.sigmas".into(),
            expected: scenario.anchor_count(),
            found: noise.len(),
        });
    }
    if let Some(i) = noise.sigmas().iter().position(|s| *s <= 0.0) {
        return Err(Error::InvalidValue {
            field: format!("sigmas[{i}]"),
            reason: "Fisher information needs strictly positive sigmas".into(),
        });
    }
    let j = design_matrix(scenario, truth)?.into_matrix();
    let mut wj = j.clone();
    for (mut row, s) in wj.row_iter_mut().zip(noise.sigmas()) {
        row /= s * s;
    }
    let f = j.transpose() * wj;
    // exact symmetry
    Ok((&f + f.transpose()) * 0.5)
}

/// `CRLB = F^-1`.
pub fn crlb(fim: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !fim.is_square() {
        return Err(Error::DimensionMismatch {
            field: "fim".into(),
            expected: fim.nrows(),
            found: fim.ncols(),
        });
    }
    let (inverse, rcond) = inverse_with_rcond(fim);
    match inverse {
        Some(inv) if rcond > FIM_RCOND => Ok((&inv + inv.transpose()) * 0.5),
        _ => Err(Error::SingularFim { rcond }),
    }
}

/// Sums the diagonal of each parameter block of a `(2K+2)^2` bound matrix.
pub fn partition_crlb(crlb: &DMatrix<f64>, k: usize) -> Result<CrlbPartition> {
    let n = 2 * k + 2;
    if crlb.nrows() != n || crlb.ncols() != n {
        return Err(Error::DimensionMismatch {
            field: "crlb".into(),
            expected: n,
            found: crlb.nrows(),
        });
    }
    let d = crlb.diagonal();
    Ok(CrlbPartition {
        pos_bound: d.rows(0, k).sum(),
        vel_bound: d.rows(k, k).sum(),
        beta_bound: d[2 * k],
        omega_bound: d[2 * k + 1],
    })
}

/// Per-run squared errors `(|dp|^2, |dv|^2, dbeta^2, domega^2)`.
pub fn squared_errors(truth: &UserState, estimate: &UserState) -> [f64; 4] {
    [
        (&truth.p - &estimate.p).norm_squared(),
        (&truth.v - &estimate.v).norm_squared(),
        (truth.beta - estimate.beta).powi(2),
        (truth.omega - estimate.omega).powi(2),
    ]
}

pub fn mse_metrics(truths: &[UserState], estimates: &[UserState]) -> Result<MseRecord> {
    if truths.len() != estimates.len() {
        return Err(Error::LengthMismatch {
            left: truths.len(),
            right: estimates.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::InvalidValue {
            field: "truths".into(),
            reason: "at least one run is needed".into(),
        });
    }
    let mut sums = [0.0; 4];
    for (t, e) in truths.iter().zip(estimates) {
        if t.dimension() != e.dimension() {
            return Err(Error::DimensionMismatch {
                field: "estimate.p".into(),
                expected: t.dimension(),
                found: e.dimension(),
            });
        }
        for (s, x) in sums.iter_mut().zip(squared_errors(t, e)) {
            *s += x;
        }
    }
    let n = truths.len() as f64;
    Ok(MseRecord {
        mse_p: sums[0] / n,
        mse_v: sums[1] / n,
        mse_beta: sums[2] / n,
        mse_omega: sums[3] / n,
        run_count: truths.len(),
    })
}

/// Fraction of squared position errors strictly below `factor * pos_bound`.
pub fn correctness_rate(position_sq_errors: &[f64], pos_bound: f64, factor: f64) -> Result<f64> {
    if !(pos_bound > 0.0) {
        return Err(Error::InvalidValue {
            field: "pos_bound".into(),
            reason: format!("must be positive, got {pos_bound}"),
        });
    }
    if position_sq_errors.is_empty() {
        return Ok(0.0);
    }
    let threshold = factor * pos_bound;
    let correct = position_sq_errors.iter().filter(|e| **e < threshold).count();
    Ok(correct as f64 / position_sq_errors.len() as f64)
}

/// Flop count D of one closed-form solve:
/// `32K^3 + 16K^2 M + 104K^2 + 62KM + 148K + 65M + 697`.
pub fn flops_cfjlas(k: u64, m: u64) -> u64 {
    32 * k.pow(3) + 16 * k * k * m + 104 * k * k + 62 * k * m + 148 * k + 65 * m + 697
}

/// Flop count L of one Gauss-Newton iteration:
/// `16K^3 + 8K^2 M + 56K^2 + 22KM + 64K + 16M + 24`.
pub fn flops_per_iteration(k: u64, m: u64) -> u64 {
    16 * k.pow(3) + 8 * k * k * m + 56 * k * k + 22 * k * m + 64 * k + 16 * m + 24
}

/// Total flop count `n L` of `n` iterations.
pub fn flops_iterative(k: u64, m: u64, n: u64) -> u64 {
    n * flops_per_iteration(k, m)
}
