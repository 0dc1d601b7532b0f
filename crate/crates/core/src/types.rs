//! Domain types shared by the estimators, the bound computations and the
//! simulation harness.
//!
//! Everything inside the library is expressed in meter units: clock offsets
//! are seconds multiplied by the propagation speed, clock skews are
//! dimensionless rates multiplied by the propagation speed (so m/s). Seconds
//! and ppm only show up at configuration boundaries, see [`to_meter_units`].

use std::collections::HashSet;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a clock offset in seconds and a skew in ppm to meter units.
pub fn to_meter_units(beta_seconds: f64, omega_ppm: f64, c: f64) -> Result<(f64, f64)> {
    check_speed(c)?;
    if !beta_seconds.is_finite() {
        return Err(Error::NonFinite("beta_seconds".into()));
    }
    if !omega_ppm.is_finite() {
        return Err(Error::NonFinite("omega_ppm".into()));
    }
    Ok((beta_seconds * c, omega_ppm * 1e-6 * c))
}

/// Inverse of [`to_meter_units`].
pub fn from_meter_units(beta: f64, omega: f64, c: f64) -> Result<(f64, f64)> {
    check_speed(c)?;
    if !beta.is_finite() {
        return Err(Error::NonFinite("beta".into()));
    }
    if !omega.is_finite() {
        return Err(Error::NonFinite("omega".into()));
    }
    Ok((beta / c, omega / c * 1e6))
}

fn check_speed(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidValue {
            field: "c".into(),
            reason: format!("propagation speed must be positive and finite, got {c}"),
        });
    }
    Ok(())
}

fn check_dimension(k: usize) -> Result<()> {
    if k == 2 || k == 3 {
        Ok(())
    } else {
        Err(Error::InvalidValue {
            field: "dimension".into(),
            reason: format!("K must be 2 or 3, got {k}"),
        })
    }
}

fn check_finite(field: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(field.into()))
    }
}

/// Unknown state of a user node at the start of a TDMA round.
#[derive(Debug, Clone, PartialEq)]
pub struct UserState {
    /// Position, m.
    pub p: DVector<f64>,
    /// Velocity, m/s.
    pub v: DVector<f64>,
    /// Clock offset, m.
    pub beta: f64,
    /// Clock skew, m/s.
    pub omega: f64,
}

impl UserState {
    pub fn new(p: DVector<f64>, v: DVector<f64>, beta: f64, omega: f64) -> Result<Self> {
        check_dimension(p.len())?;
        if v.len() != p.len() {
            return Err(Error::DimensionMismatch {
                field: "v".into(),
                expected: p.len(),
                found: v.len(),
            });
        }
        check_finite("p", p.as_slice())?;
        check_finite("v", v.as_slice())?;
        check_finite("beta", &[beta])?;
        check_finite("omega", &[omega])?;
        Ok(Self { p, v, beta, omega })
    }

    pub fn from_slices(p: &[f64], v: &[f64], beta: f64, omega: f64) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(p),
            DVector::from_column_slice(v),
            beta,
            omega,
        )
    }

    pub fn dimension(&self) -> usize {
        self.p.len()
    }

    /// Stacks the state as `[p, v, beta, omega]`, length 2K+2.
    pub fn to_vector(&self) -> DVector<f64> {
        let k = self.dimension();
        let mut out = DVector::zeros(2 * k + 2);
        out.rows_mut(0, k).copy_from(&self.p);
        out.rows_mut(k, k).copy_from(&self.v);
        out[2 * k] = self.beta;
        out[2 * k + 1] = self.omega;
        out
    }

    /// Unstacks a `[p, v, beta, omega]` vector. No finiteness check, so
    /// diverging iterates can still be carried around and reported.
    pub fn from_vector(theta: &DVector<f64>) -> Result<Self> {
        let n = theta.len();
        if n != 6 && n != 8 {
            return Err(Error::DimensionMismatch {
                field: "theta".into(),
                expected: 6,
                found: n,
            });
        }
        let k = (n - 2) / 2;
        Ok(Self {
            p: theta.rows(0, k).into_owned(),
            v: theta.rows(k, k).into_owned(),
            beta: theta[2 * k],
            omega: theta[2 * k + 1],
        })
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.v.iter()).all(|x| x.is_finite())
            && self.beta.is_finite()
            && self.omega.is_finite()
    }
}

/// A transmitting anchor, as seen at its own transmission instant.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorNode {
    pub id: usize,
    /// Position at the transmission instant, m.
    pub position: DVector<f64>,
    /// Known clock offset, m.
    pub clock_offset: f64,
    /// Transmission time measured from the start of the round, s.
    pub slot_time: f64,
}

impl AnchorNode {
    pub fn new(id: usize, position: &[f64], clock_offset: f64, slot_time: f64) -> Self {
        Self {
            id,
            position: DVector::from_column_slice(position),
            clock_offset,
            slot_time,
        }
    }
}

/// Anchor geometry and slot schedule for one TDMA round.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    anchors: Vec<AnchorNode>,
    dimension: usize,
    signal_speed: f64,
}

impl Scenario {
    /// Builds and validates a scenario; see [`validate_scenario`].
    pub fn new(anchors: Vec<AnchorNode>, dimension: usize, signal_speed: f64) -> Result<Self> {
        validate_scenario(Self {
            anchors,
            dimension,
            signal_speed,
        })
    }

    pub fn anchors(&self) -> &[AnchorNode] {
        &self.anchors
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of unknowns, 2K+2.
    pub fn state_len(&self) -> usize {
        2 * self.dimension + 2
    }

    pub fn signal_speed(&self) -> f64 {
        self.signal_speed
    }

    pub fn slot_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.anchors.iter().map(|a| a.slot_time)
    }

    /// Same scenario with every anchor shifted by `offset`.
    pub fn translated(&self, offset: &DVector<f64>) -> Result<Self> {
        let anchors = self
            .anchors
            .iter()
            .map(|a| AnchorNode {
                position: &a.position + offset,
                ..a.clone()
            })
            .collect();
        Self::new(anchors, self.dimension, self.signal_speed)
    }

    pub(crate) fn check_state(&self, state: &UserState) -> Result<()> {
        if state.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                field: "state.p".into(),
                expected: self.dimension,
                found: state.dimension(),
            });
        }
        Ok(())
    }
}

/// Checks every scenario invariant and hands the scenario back unchanged.
///
/// Requires K in {2, 3}, at least 2K+3 anchors (so the differenced linear
/// system has at least as many rows as unknowns), unique ids, finite
/// positions of dimension K, and strictly increasing non-negative slot times.
pub fn validate_scenario(scenario: Scenario) -> Result<Scenario> {
    let k = scenario.dimension;
    check_dimension(k)?;
    check_speed(scenario.signal_speed)?;
    let required = 2 * k + 3;
    if scenario.anchors.len() < required {
        return Err(Error::TooFewAnchors {
            found: scenario.anchors.len(),
            required,
            dimension: k,
        });
    }
    let mut ids = HashSet::new();
    let mut previous_slot = f64::NEG_INFINITY;
    for (i, anchor) in scenario.anchors.iter().enumerate() {
        if anchor.position.len() != k {
            return Err(Error::DimensionMismatch {
                field: format!("anchors[{i}].position"),
                expected: k,
                found: anchor.position.len(),
            });
        }
        check_finite(&format!("anchors[{i}].position"), anchor.position.as_slice())?;
        check_finite(&format!("anchors[{i}].clock_offset"), &[anchor.clock_offset])?;
        check_finite(&format!("anchors[{i}].slot_time"), &[anchor.slot_time])?;
        if !ids.insert(anchor.id) {
            return Err(Error::DuplicateAnchorId(anchor.id));
        }
        if anchor.slot_time < 0.0 || anchor.slot_time <= previous_slot {
            return Err(Error::NonMonotoneSlots {
                field: format!("anchors[{i}].slot_time"),
            });
        }
        previous_slot = anchor.slot_time;
    }
    Ok(scenario)
}

/// Diagonal Gaussian noise: one standard deviation per measurement, m.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    sigmas: Vec<f64>,
}

/// Diagonal of the weighting matrix W = C^-1.
#[derive(Debug, Clone, PartialEq)]
pub struct Weighting {
    pub diag: DVector<f64>,
    /// Set when some sigma is zero and identity weights were used instead.
    pub identity_fallback: bool,
}

impl NoiseModel {
    pub fn new(sigmas: Vec<f64>) -> Result<Self> {
        for (i, s) in sigmas.iter().enumerate() {
            if !s.is_finite() || *s < 0.0 {
                return Err(Error::InvalidValue {
                    field: format!("sigmas[{i}]"),
                    reason: format!("standard deviation must be finite and >= 0, got {s}"),
                });
            }
        }
        Ok(Self { sigmas })
    }

    /// Same sigma for all `m` measurements.
    pub fn uniform(m: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![sigma; m])
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    /// W = C^-1, or identity if any sigma is zero.
    pub fn weights(&self) -> Weighting {
        if self.sigmas.iter().any(|s| *s == 0.0) {
            Weighting {
                diag: DVector::from_element(self.sigmas.len(), 1.0),
                identity_fallback: true,
            }
        } else {
            Weighting {
                diag: DVector::from_iterator(self.sigmas.len(), self.sigmas.iter().map(|s| 1.0 / (s * s))),
                identity_fallback: false,
            }
        }
    }
}

/// One round of sequential TOA observations, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub taus: DVector<f64>,
    pub noise: NoiseModel,
}

impl MeasurementSet {
    pub fn new(taus: DVector<f64>, noise: NoiseModel) -> Result<Self> {
        if taus.len() != noise.len() {
            return Err(Error::DimensionMismatch {
                field: "noise.sigmas".into(),
                expected: taus.len(),
                found: noise.len(),
            });
        }
        check_finite("taus", taus.as_slice())?;
        Ok(Self { taus, noise })
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }

    pub(crate) fn check_against(&self, scenario: &Scenario) -> Result<()> {
        if self.taus.len() != scenario.anchor_count() {
            return Err(Error::DimensionMismatch {
                field: "taus".into(),
                expected: scenario.anchor_count(),
                found: self.taus.len(),
            });
        }
        Ok(())
    }
}
