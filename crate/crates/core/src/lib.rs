//! Planning engine for multi-UAV battery replacement at ground swap stations.
//!
//! A fleet of UAVs flies fixed waypoint missions; static stations hold charged
//! spare batteries. The planner decides when and where each UAV interrupts its
//! mission to swap its battery so that every mission finishes without the
//! state of charge ever falling below a configured floor, minimizing the total
//! state of charge consumed across the fleet.
//!
//! Crate layout:
//! - [`model`] — shared domain types (UAVs, stations, batteries, plans)
//! - [`energy`] — distance / travel time / consumption model and mission profiles
//! - [`scenario`] — problem-instance construction: random generation, mission
//!   file ingestion, scenario documents
//! - [`actions`] — precomputed detour cost tensor and candidate enumeration
//! - [`schedule`] — per-station reservation calendars
//! - [`planner`] — best-first search for the minimum-consumption swap plan,
//!   plus an exhaustive oracle for small instances
//! - [`report`] — plan simulation, validation, and table/CSV rendering

pub mod actions;
pub mod energy;
pub mod model;
pub mod planner;
pub mod report;
pub mod scenario;
pub mod schedule;

#[cfg(test)]
pub(crate) mod test_support;

pub use model::{Battery, LocalPoint, Mission, Plan, ReplacementAction, Soc, Station, Uav};
pub use planner::{plan, PlanError, SearchStats};
pub use scenario::{PlannerConfig, Scenario};
