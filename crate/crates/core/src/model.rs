//! Shared domain types: batteries, UAVs, stations, missions, and plans.
//!
//! Everything here is an immutable value object once constructed; planning
//! code clones and rebuilds rather than mutating in place.

use serde::{Deserialize, Serialize};

use crate::schedule::StationSchedule;

/// State of charge, a dimensionless fraction of battery capacity in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Soc(f64);

impl Soc {
    /// Fully charged battery.
    pub const FULL: Soc = Soc(1.0);

    pub fn new(value: f64) -> Result<Self, ModelError> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(ModelError::SocOutOfRange(value));
        }
        Ok(Soc(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A spare battery installed at a station. Batteries are fungible during
/// planning (a swap decrements a station counter); ids exist for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub id: String,
    pub soc: Soc,
}

/// A point in the scenario-wide local metric frame, meters. All points in one
/// scenario share a dimensionality (all 2-D or all 3-D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocalPoint {
    pub coords: Vec<f64>,
}

impl LocalPoint {
    pub fn new2(x: f64, y: f64) -> Self {
        LocalPoint { coords: vec![x, y] }
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        LocalPoint {
            coords: vec![x, y, z],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }
}

/// Lifecycle state of a UAV. Tracked for simulation fidelity; the planner
/// itself does not branch on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UavState {
    TakingOff,
    FlyingMission,
    WaitingAtStation,
    Done,
}

/// Events that drive the UAV state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavEvent {
    ReachedFirstWaypoint,
    ArrivedAtStation,
    DepartedStation,
    MissionCompleted,
}

/// A vehicle in the fleet. Speed is constant over straight-line legs;
/// `max_flight_time` is the endurance of a full battery at that speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uav {
    pub id: String,
    /// Travel speed, meters per second.
    pub speed: f64,
    /// Endurance on a full charge, seconds.
    pub max_flight_time: f64,
    pub initial_soc: Soc,
    pub start_position: LocalPoint,
    pub state: UavState,
}

/// Advance a UAV's lifecycle state.
///
/// Legal transitions: `TakingOff -> FlyingMission`,
/// `FlyingMission <-> WaitingAtStation`, `FlyingMission -> Done`.
pub fn advance_uav_state(uav: &Uav, event: UavEvent) -> Result<Uav, ModelError> {
    use UavEvent::*;
    use UavState::*;
    let next = match (uav.state, event) {
        (TakingOff, ReachedFirstWaypoint) => FlyingMission,
        (FlyingMission, ArrivedAtStation) => WaitingAtStation,
        (WaitingAtStation, DepartedStation) => FlyingMission,
        (FlyingMission, MissionCompleted) => Done,
        (state, _) => return Err(ModelError::IllegalTransition { state, event }),
    };
    let mut updated = uav.clone();
    updated.state = next;
    Ok(updated)
}

/// An ordered waypoint mission assigned to one UAV. `completed_count`
/// waypoints are treated as already flown at scenario start; their cost is
/// assumed reflected in the UAV's initial state of charge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub uav_id: String,
    pub waypoints: Vec<LocalPoint>,
    pub completed_count: usize,
}

impl Mission {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}

/// Occupancy state of a station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationState {
    Idle,
    Replacing,
}

/// A static battery swap station. One replacement is serviced at a time;
/// `slots` is informational. Charged inventory only decreases during a
/// planning horizon (no recharging is modeled).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    pub position: LocalPoint,
    pub slots: usize,
    pub batteries: Vec<Battery>,
    /// Time the swap itself takes, seconds (margins are configured separately).
    pub replacement_duration: f64,
    pub state: StationState,
}

/// Count batteries at `station` whose charge is at least `full_threshold`.
pub fn charged_battery_count(station: &Station, full_threshold: Soc) -> usize {
    station
        .batteries
        .iter()
        .filter(|b| b.soc.value() >= full_threshold.value())
        .count()
}

/// One committed battery replacement: at `waypoint_index` of its mission, the
/// UAV detours to `station_id`, swaps, and returns to the same waypoint.
///
/// `depart_time` is when the UAV leaves the waypoint toward the station,
/// `arrival_time` when it reaches the station, and `release_time` when the
/// swap completes and the UAV departs. The station calendar blocks a wider
/// window around `[arrival_time, release_time]` that includes safety margins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplacementAction {
    pub uav_id: String,
    pub station_id: String,
    pub waypoint_index: usize,
    pub depart_time: f64,
    pub arrival_time: f64,
    pub release_time: f64,
}

/// A sampled point of a predicted per-UAV charge timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocPoint {
    pub time_s: f64,
    pub soc: f64,
}

/// Predicted state-of-charge over time for one UAV, piecewise linear between
/// samples, discontinuous only where a swap completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocTimeline {
    pub uav_id: String,
    pub points: Vec<SocPoint>,
}

/// Mission completion time for one UAV, detours and swaps included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavMakespan {
    pub uav_id: String,
    pub makespan_s: f64,
}

/// A complete replacement plan: the committed actions, the station calendars
/// they reserve, predicted charge timelines, and summary costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Committed actions ordered by `arrival_time`.
    pub actions: Vec<ReplacementAction>,
    /// One reservation calendar per station, margin-inclusive windows.
    pub schedules: Vec<StationSchedule>,
    /// Predicted per-UAV charge timelines.
    pub soc_timelines: Vec<SocTimeline>,
    /// Total state of charge consumed by all UAVs from scenario start.
    pub total_soc_cost: f64,
    /// Per-UAV mission completion times, seconds.
    pub makespans: Vec<UavMakespan>,
}

/// Errors from domain-type construction and state transitions.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("state of charge {0} outside [0, 1]")]
    SocOutOfRange(f64),
    #[error("illegal UAV transition: event {event:?} in state {state:?}")]
    IllegalTransition { state: UavState, event: UavEvent },
}
