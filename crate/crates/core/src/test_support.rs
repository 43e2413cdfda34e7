//! Small scenario builders shared by unit tests.

use crate::model::{Battery, LocalPoint, Mission, Soc, Station, StationState, Uav, UavState};
use crate::scenario::{PlannerConfig, Scenario};

pub(crate) struct UavSpec {
    pub speed: f64,
    pub t_max: f64,
    pub soc0: f64,
    pub start: (f64, f64),
    pub waypoints: Vec<(f64, f64)>,
}

pub(crate) fn scenario(uavs: Vec<UavSpec>, stations: Vec<((f64, f64), usize)>) -> Scenario {
    Scenario {
        uavs: uavs
            .iter()
            .enumerate()
            .map(|(i, u)| Uav {
                id: format!("{}", i + 1),
                speed: u.speed,
                max_flight_time: u.t_max,
                initial_soc: Soc::new(u.soc0).unwrap(),
                start_position: LocalPoint::new2(u.start.0, u.start.1),
                state: UavState::TakingOff,
            })
            .collect(),
        missions: uavs
            .iter()
            .enumerate()
            .map(|(i, u)| Mission {
                uav_id: format!("{}", i + 1),
                waypoints: u
                    .waypoints
                    .iter()
                    .map(|&(x, y)| LocalPoint::new2(x, y))
                    .collect(),
                completed_count: 0,
            })
            .collect(),
        stations: stations
            .iter()
            .enumerate()
            .map(|(i, &(pos, n))| Station {
                id: format!("{}", 201 + i),
                position: LocalPoint::new2(pos.0, pos.1),
                slots: 1,
                batteries: (0..n)
                    .map(|k| Battery {
                        id: format!("{}-b{}", 201 + i, k + 1),
                        soc: Soc::FULL,
                    })
                    .collect(),
                replacement_duration: 120.0,
                state: StationState::Idle,
            })
            .collect(),
        config: PlannerConfig::default(),
    }
}

pub(crate) fn straight_line(n: usize, spacing: f64, y: f64) -> Vec<(f64, f64)> {
    (1..=n).map(|i| (i as f64 * spacing, y)).collect()
}

/// Two UAVs that each need one swap at the single shared station, with the
/// cheapest windows colliding so the planner must stagger them.
pub(crate) fn two_uav_one_station() -> Scenario {
    let mut s = scenario(
        vec![
            UavSpec {
                speed: 5.0,
                t_max: 600.0,
                soc0: 0.45,
                start: (0.0, 0.0),
                waypoints: straight_line(3, 300.0, 0.0),
            },
            UavSpec {
                speed: 5.0,
                t_max: 600.0,
                soc0: 0.49,
                start: (0.0, 100.0),
                waypoints: straight_line(3, 300.0, 100.0),
            },
        ],
        vec![((450.0, 0.0), 2)],
    );
    // Swap windows short enough that one station can serve both UAVs
    // within these few-minute missions.
    s.config.replacement_duration = 30.0;
    s.config.safety_margin_before = 5.0;
    s.config.safety_margin_after = 5.0;
    for st in &mut s.stations {
        st.replacement_duration = 30.0;
    }
    s
}
