//! State-of-charge prediction: straight-line distances, constant-speed travel
//! times, time-proportional battery drain, and the per-mission profile built
//! by chaining the three over consecutive waypoint legs.

use serde::{Deserialize, Serialize};

use crate::model::{LocalPoint, Mission, Uav};

/// Errors from the consumption model's preconditions.
#[derive(Debug, thiserror::Error)]
pub enum EnergyError {
    #[error("dimension mismatch: {0}-D point vs {1}-D point")]
    DimensionMismatch(usize, usize),
    #[error("speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error("maximum flight time must be positive, got {0}")]
    NonPositiveFlightTime(f64),
}

/// Euclidean distance between two points of equal dimensionality, meters.
pub fn distance(p1: &LocalPoint, p2: &LocalPoint) -> Result<f64, EnergyError> {
    if p1.dim() != p2.dim() {
        return Err(EnergyError::DimensionMismatch(p1.dim(), p2.dim()));
    }
    let sum_sq: f64 = p1
        .coords
        .iter()
        .zip(&p2.coords)
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    Ok(sum_sq.sqrt())
}

/// Time to cover `d` meters at `speed` meters per second.
pub fn travel_time(d: f64, speed: f64) -> Result<f64, EnergyError> {
    if speed <= 0.0 {
        return Err(EnergyError::NonPositiveSpeed(speed));
    }
    Ok(d / speed)
}

/// Fraction of a full charge consumed by flying for `delta_t` seconds on a
/// battery that lasts `max_flight_time` seconds from full.
pub fn soc_cost(delta_t: f64, max_flight_time: f64) -> Result<f64, EnergyError> {
    if max_flight_time <= 0.0 {
        return Err(EnergyError::NonPositiveFlightTime(max_flight_time));
    }
    Ok(delta_t / max_flight_time)
}

/// Detour-free prediction for the tail of one mission: per-waypoint arrival
/// times and charge levels for waypoints `start_index..`, flown from
/// `start_position` starting at `start_time` with `start_soc` remaining.
///
/// Times are non-decreasing and charge is non-increasing; between waypoints
/// the charge is linear in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionProfile {
    /// First waypoint index covered by the profile (= number already flown).
    pub start_index: usize,
    pub start_time: f64,
    pub start_soc: f64,
    /// Arrival time at waypoint `start_index + k`, seconds.
    pub waypoint_times: Vec<f64>,
    /// Predicted charge on arrival at waypoint `start_index + k`.
    pub waypoint_soc: Vec<f64>,
}

impl MissionProfile {
    /// Total number of mission waypoints (flown + profiled).
    pub fn mission_len(&self) -> usize {
        self.start_index + self.waypoint_times.len()
    }

    /// Charge on arrival at the waypoint that made progress equal `progress`,
    /// i.e. after `progress` waypoints have been flown.
    pub fn soc_at_progress(&self, progress: usize) -> f64 {
        if progress <= self.start_index {
            self.start_soc
        } else {
            self.waypoint_soc[progress - 1 - self.start_index]
        }
    }

    /// Arrival time at progress `progress`, seconds.
    pub fn time_at_progress(&self, progress: usize) -> f64 {
        if progress <= self.start_index {
            self.start_time
        } else {
            self.waypoint_times[progress - 1 - self.start_index]
        }
    }

    /// Index of the last waypoint reachable with charge still at or above
    /// `min_soc`, or `None` if even the first profiled waypoint is not.
    pub fn feasible_until(&self, min_soc: f64) -> Option<usize> {
        let mut last = None;
        for (k, &soc) in self.waypoint_soc.iter().enumerate() {
            if soc >= min_soc {
                last = Some(self.start_index + k);
            } else {
                break;
            }
        }
        last
    }
}

/// Build the detour-free profile for `mission` flown by `uav`, starting at
/// waypoint `start_index` from `start_position`.
pub fn mission_profile(
    uav: &Uav,
    mission: &Mission,
    start_index: usize,
    start_soc: f64,
    start_time: f64,
    start_position: &LocalPoint,
) -> Result<MissionProfile, EnergyError> {
    let mut times = Vec::with_capacity(mission.len().saturating_sub(start_index));
    let mut socs = Vec::with_capacity(times.capacity());
    let mut t = start_time;
    let mut soc = start_soc;
    let mut pos = start_position;
    for wp in &mission.waypoints[start_index.min(mission.len())..] {
        let d = distance(pos, wp)?;
        let dt = travel_time(d, uav.speed)?;
        t += dt;
        soc -= soc_cost(dt, uav.max_flight_time)?;
        times.push(t);
        socs.push(soc);
        pos = wp;
    }
    Ok(MissionProfile {
        start_index,
        start_time,
        start_soc,
        waypoint_times: times,
        waypoint_soc: socs,
    })
}

/// Charge consumed by flying the remaining mission legs from progress
/// `from_index` (waypoints already flown) through the final waypoint,
/// excluding any detours. This is the per-UAV term of the search heuristic
/// and never exceeds the cost of a continuation that adds detour legs.
pub fn remaining_soc_to_finish(profile: &MissionProfile, from_index: usize) -> f64 {
    match profile.waypoint_soc.last() {
        None => 0.0,
        Some(&final_soc) => profile.soc_at_progress(from_index) - final_soc,
    }
}
