//! # hexnet-core
//!
//! Physical-layer modelling, link planning, slot scheduling and MAC
//! simulation for dense wireless ad hoc networks.
//!
//! The crate is organised around a pipeline:
//!
//! - [`model`] — channel gains, SINR, Shannon rates and the radio power
//!   model shared by everything else.
//! - [`lattice`] — interference sums on an infinite hexagonal packing of
//!   concurrent links, the area-rate function `G`, and the constrained
//!   optimiser that trades rate density against energy per bit.
//! - [`planner`] — per-link transmission power / target interference
//!   assignment under the equal-product rule, with ablation modes.
//! - [`scheduler`] — sequential greedy packing of links into time slots so
//!   that every destination's interference stays at or below its target.
//! - [`cells`] — hexagonal cell geometry, coordinator placement and the
//!   7-colour scheduling-slot assignment.
//! - [`sim`] — the slotted coordinator MAC simulator (contention,
//!   scheduling and data slots, traffic, mobility, energy).
//! - [`csma`] — a DCF-style CSMA/CA baseline with an optional
//!   power-saving (ATIM) mode and an empirical configuration sweep.
//! - [`metrics`] — distance-weighted throughput, energy per bit and
//!   scheduling efficiency over an inner-region filter.

pub mod cells;
pub mod csma;
pub mod error;
pub mod lattice;
pub mod metrics;
pub mod model;
pub mod planner;
pub mod scenario;
pub mod scheduler;
pub mod sim;
pub mod trace;
pub mod units;
pub mod util;

pub use error::Error;
pub use model::{LinkDemand, RadioParams, Topology};
