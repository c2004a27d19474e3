//! Simulation library for ISAC-equipped UAV encounters.
//!
//! Two questions are answered here. First, how much a range/bearing radar
//! track improves when an extended Kalman filter treats communication-derived
//! location uncertainty as its process channel ([`fusion`]). Second, how much
//! faster an Identification-Friend-or-Foe exchange completes when radar
//! detection and interrogation decoding overlap on one integrated signal
//! ([`iff`]). The [`harness`] module wires both into seeded Monte Carlo
//! experiments that emit CSV tables.

pub mod error;
pub mod fusion;
pub mod harness;
pub mod iff;
pub mod kinematics;
pub mod linalg;
pub mod measurement;

pub use error::{Error, Result};
pub use fusion::{FilterState, FusionMetrics};
pub use harness::{ExperimentReport, ScenarioConfig};
pub use iff::{ExchangeTrace, IffNode, TimingBudget};
pub use kinematics::{MotionProfile, ObserverPose, TargetState};
pub use measurement::{MeasurementNoise, ProcessNoise, RadarMeasurement};
