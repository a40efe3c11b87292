//! Performance models for PBFT consensus running over non-ideal wireless links.
//!
//! The crate is split along the physical-to-protocol chain:
//!
//! - [`numerics`]: Gaussian Q function, its inverse, adaptive quadrature and
//!   log-space binomial coefficients.
//! - [`channel`]: signal presets, Rayleigh-fading SNR, close-in free-space path
//!   loss, link and disk-averaged transmission success, active distance.
//! - [`consensus`]: fault budget and the staged binomial success rates of a
//!   four-phase PBFT round.
//! - [`latency`]: finite-blocklength error relation and the per-phase delays
//!   derived from it.
//! - [`simulator`]: seeded Monte Carlo estimator used as an independent check on
//!   the analytic engine.

pub mod channel;
pub mod consensus;
pub mod error;
pub mod latency;
pub mod numerics;
pub mod simulator;

pub use channel::{NetworkGeometry, PathLossSample, SignalProfile};
pub use consensus::{FaultBudget, StageReport};
pub use error::{Error, Result};
pub use latency::{DelayModel, DelayReport, Eq11Form, LogBase};
pub use numerics::Tolerance;
pub use simulator::{LinkModel, SimConfig, SimEstimate, SimMode};
