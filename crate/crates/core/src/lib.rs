//! Freshness-aware observation scheduling for agile Earth observation
//! satellite constellations with onboard processing.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`scenario`] describes (or synthesizes) a constellation, a target set,
//!    ground stations and a planning horizon split into short-term periods.
//! 2. [`orbit_geometry`] propagates circular orbits and extracts visible time
//!    windows (satellite/target) and contact windows (satellite/station).
//! 3. [`discretization`] turns each visible window into fixed-step candidate
//!    observation windows, each carrying attitude, data volume, processing
//!    time and a staleness-weighted profit.
//! 4. [`scheduler`] builds one schedule per period (priority-driven
//!    constructive heuristic, optional local search, or the FIFO baseline)
//!    and [`sim`] executes it with store-and-forward downlink, tracking
//!    Age of Information per target ([`timing`]).

pub mod discretization;
pub mod error;
pub mod orbit_geometry;
pub mod priority;
pub mod resources;
pub mod scenario;
pub mod scheduler;
pub mod sim;
pub mod timing;

pub use error::{Error, Result};
pub use scenario::{Scenario, TargetId};
