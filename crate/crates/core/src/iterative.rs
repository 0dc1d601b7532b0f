//! Plain Gauss-Newton maximum-likelihood baseline.
//!
//! No damping or line search: the baseline is meant to show how an iterative
//! solver behaves when started from a poor guess, failures included.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::normal_step;
use crate::types::{MeasurementSet, Scenario, UserState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeOptions {
    pub max_iterations: usize,
    /// Stop once `|[dp, dbeta]|` drops below this, m.
    pub convergence_threshold: f64,
    /// Treat the normal matrix as singular below this reciprocal condition.
    pub rcond_threshold: f64,
}

impl Default for IterativeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            convergence_threshold: 0.01,
            rcond_threshold: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    SingularMatrix,
    IterationCountExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterativeResult {
    pub state: UserState,
    pub stop_reason: StopReason,
    pub iterations_used: usize,
}

/// Iterates `theta += (J^T W J)^-1 J^T W (tau_hat - h(theta))`, relinearizing
/// each time, until the position/offset increment is small, the normal matrix
/// turns singular, or the iteration budget runs out.
///
/// A range collapsing to zero or an iterate going non-finite is reported as
/// [`StopReason::SingularMatrix`]: the normal matrix cannot be formed there.
pub fn iterate_ml(
    scenario: &Scenario,
    meas: &MeasurementSet,
    initial: &UserState,
    opts: &IterativeOptions,
) -> Result<IterativeResult> {
    meas.check_against(scenario)?;
    scenario.check_state(initial)?;
    if !(opts.convergence_threshold > 0.0 && opts.rcond_threshold > 0.0) {
        return Err(Error::InvalidValue {
            field: "iterative options".into(),
            reason: "thresholds must be positive".into(),
        });
    }
    let k = scenario.dimension();
    let mut state = initial.clone();
    for iteration in 0..opts.max_iterations {
        let step = match normal_step(scenario, meas, &state, opts.rcond_threshold) {
            Ok(step) => step,
            Err(Error::SingularNormalMatrix { .. }) | Err(Error::ZeroRange { .. }) => {
                return Ok(IterativeResult {
                    state,
                    stop_reason: StopReason::SingularMatrix,
                    iterations_used: iteration,
                })
            }
            Err(e) => return Err(e),
        };
        let delta = &step.delta;
        let increment = (delta.rows(0, k).norm_squared() + delta[2 * k].powi(2)).sqrt();
        state = UserState::from_vector(&(state.to_vector() + delta))?;
        if increment < opts.convergence_threshold {
            return Ok(IterativeResult {
                state,
                stop_reason: StopReason::Converged,
                iterations_used: iteration + 1,
            });
        }
    }
    Ok(IterativeResult {
        state,
        stop_reason: StopReason::IterationCountExceeded,
        iterations_used: opts.max_iterations,
    })
}
