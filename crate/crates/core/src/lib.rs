//! Controllability analysis for spacecraft attitude control with magnetic
//! torques only.
//!
//! The crate builds the linear time-varying model `x' = A x + B(t) m` of a
//! nadir-pointing spacecraft in a circular orbit through a tilted dipole
//! field, checks the rank criterion built from `K0, K1, K2`, evaluates the
//! closed-form inertia conditions, and cross-checks everything against a
//! controllability Gramian and an explicit minimum-energy maneuver.

pub mod cli;
pub mod controllability;
pub mod maneuver;
pub mod model;
pub mod numerics;

pub use controllability::{ControllabilityReport, KMatrices, Verdict};
pub use maneuver::ManeuverResult;
pub use model::{InertiaTensor, OrbitConfig, StateVector};
