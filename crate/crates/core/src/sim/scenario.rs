use std::path::Path;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{to_meter_units, AnchorNode, Scenario, UserState, SPEED_OF_LIGHT};

/// An anchor's motion over the round and its slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    pub id: usize,
    /// Position at the start of the round, m.
    pub start_position: Vec<f64>,
    /// Constant velocity over the round, m/s.
    pub velocity: Vec<f64>,
    /// Known clock offset, s.
    pub clock_offset_s: f64,
    /// Transmission time from the start of the round, s.
    pub slot_time_s: f64,
}

/// Distribution of the user's true state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSpec {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Clock offset drawn uniformly from `[lo, hi]`, s.
    pub beta_bounds_s: [f64; 2],
    /// Clock skew drawn uniformly from `[lo, hi]`, ppm.
    pub omega_bounds_ppm: [f64; 2],
}

/// Scenario file contents: anchor formation plus user truth distribution.
///
/// Stored as TOML:
///
/// ```toml
/// dimension = 2
/// signal_speed = 299792458.0
///
/// [user]
/// position = [0.0, 0.0]
/// velocity = [5.0, 0.0]
/// beta_bounds_s = [-1e-5, 1e-5]
/// omega_bounds_ppm = [-20.0, 20.0]
///
/// [[anchors]]
/// id = 1
/// start_position = [-385.0, 154.0]
/// velocity = [2.0, 0.0]
/// clock_offset_s = 0.0
/// slot_time_s = 0.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub dimension: usize,
    /// m/s
    pub signal_speed: f64,
    pub user: UserSpec,
    pub anchors: Vec<AnchorSpec>,
}

impl ScenarioSpec {
    /// Planar formation of eight anchors and one user, everything drifting
    /// along +x: anchors 1, 2 and 8 at the back, 3 to 7 forming a triangle at
    /// the front, the user near the middle. Anchors move at 2 m/s, the user at
    /// 5 m/s; slots are 5 ms apart.
    pub fn default_formation() -> Self {
        let starts: [(f64, f64); 8] = [
            (-385.0, 154.0),
            (-385.0, -154.0),
            (231.0, 231.0),
            (231.0, -231.0),
            (462.0, 0.0),
            (346.5, 115.5),
            (346.5, -115.5),
            (-385.0, 0.0),
        ];
        let anchors = starts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| AnchorSpec {
                id: i + 1,
                start_position: vec![x, y],
                velocity: vec![2.0, 0.0],
                clock_offset_s: 0.0,
                slot_time_s: 0.005 * i as f64,
            })
            .collect();
        Self {
            dimension: 2,
            signal_speed: SPEED_OF_LIGHT,
            user: UserSpec {
                position: vec![0.0, 0.0],
                velocity: vec![5.0, 0.0],
                beta_bounds_s: [-1e-5, 1e-5],
                omega_bounds_ppm: [-20.0, 20.0],
            },
            anchors,
        }
    }

    /// Anchors placed at their own slot times, `p_i = p_i(0) + v_i t_i`.
    pub fn scenario(&self) -> Result<Scenario> {
        let c = self.signal_speed;
        let anchors = self
            .anchors
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if a.start_position.len() != a.velocity.len() {
                    return Err(Error::DimensionMismatch {
                        field: format!("anchors[{i}].velocity"),
                        expected: a.start_position.len(),
                        found: a.velocity.len(),
                    });
                }
                let position: Vec<f64> = a
                    .start_position
                    .iter()
                    .zip(&a.velocity)
                    .map(|(p, v)| p + v * a.slot_time_s)
                    .collect();
                let (clock_offset, _) = to_meter_units(a.clock_offset_s, 0.0, c)?;
                Ok(AnchorNode::new(a.id, &position, clock_offset, a.slot_time_s))
            })
            .collect::<Result<Vec<_>>>()?;
        let scenario = Scenario::new(anchors, self.dimension, c)?;
        self.check_user()?;
        Ok(scenario)
    }

    fn check_user(&self) -> Result<()> {
        let k = self.dimension;
        for (field, v) in [("user.position", &self.user.position), ("user.velocity", &self.user.velocity)] {
            if v.len() != k {
                return Err(Error::DimensionMismatch {
                    field: field.into(),
                    expected: k,
                    found: v.len(),
                });
            }
        }
        for (field, [lo, hi]) in [
            ("user.beta_bounds_s", self.user.beta_bounds_s),
            ("user.omega_bounds_ppm", self.user.omega_bounds_ppm),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidValue {
                    field: field.into(),
                    reason: format!("need finite lo <= hi, got [{lo}, {hi}]"),
                });
            }
        }
        Ok(())
    }

    /// Draws a true user state: fixed position and velocity, clock offset
    /// and skew uniform within their bounds, converted to meter units.
    pub fn draw_truth<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<UserState> {
        self.check_user()?;
        let [blo, bhi] = self.user.beta_bounds_s;
        let [wlo, whi] = self.user.omega_bounds_ppm;
        let beta_s = blo + (bhi - blo) * rng.random::<f64>();
        let omega_ppm = wlo + (whi - wlo) * rng.random::<f64>();
        let (beta, omega) = to_meter_units(beta_s, omega_ppm, self.signal_speed)?;
        UserState::new(
            DVector::from_column_slice(&self.user.position),
            DVector::from_column_slice(&self.user.velocity),
            beta,
            omega,
        )
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario spec always serializes")
    }

    /// Reads and validates a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec = Self::from_toml_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        spec.scenario()?;
        Ok(spec)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Scenario file loader; see [`ScenarioSpec::load`].
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    ScenarioSpec::load(path)
}

/// The built-in formation, see [`ScenarioSpec::default_formation`].
pub fn default_scenario() -> ScenarioSpec {
    ScenarioSpec::default_formation()
}
