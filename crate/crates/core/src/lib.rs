//! Joint localization and synchronization of a moving user node from
//! sequential one-way time-of-arrival broadcasts.
//!
//! Anchors with known positions and clock offsets transmit one after another
//! in TDMA slots. A passive user receives every slot of a round and estimates
//! its position, velocity, clock offset and clock skew. The crate provides:
//!
//! - [`cfjlas`]: a closed-form estimator that needs no initial guess,
//! - [`iterative`]: the Gauss-Newton maximum-likelihood baseline,
//! - [`analysis`]: Fisher information, Cramér-Rao bounds, error metrics and
//!   flop-count models,
//! - [`sim`]: seeded Monte-Carlo sweeps that compare the two against the
//!   bound and write CSV/JSON reports.
//!
//! All quantities are in meter units (clock terms multiplied by the signal
//! speed).

pub mod analysis;
pub mod cfjlas;
pub mod error;
pub mod iterative;
mod linalg;
pub mod measurement;
pub mod roots;
pub mod sim;
pub mod types;

pub use error::{Error, Result, Stage};
pub use linalg::rcond;
