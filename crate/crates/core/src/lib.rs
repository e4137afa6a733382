//! Preprocessing, dataset splitting and evaluation tooling for dual-energy
//! X-ray baggage imagery.
//!
//! The crate is organised bottom-up: [`imaging`] holds pixel-level primitives,
//! [`pipeline`] builds the two-pass maximal-information window on top of
//! them, [`dataset`] handles manifests and group-aware splits, [`classify`]
//! and [`eval`] score predictions, and [`syngen`] renders synthetic scenes
//! with exact ground truth for testing.

pub mod classify;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod imaging;
pub mod io;
pub mod pipeline;
pub mod seed;
pub mod syngen;
