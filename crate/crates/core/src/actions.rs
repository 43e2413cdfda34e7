//! Candidate swap actions, priced before search.
//!
//! For every (UAV, station, waypoint) triple the one-way leg from the
//! waypoint to the station is priced once — time and charge — and stored in a
//! dense 3-D table indexed the same way. Candidate enumeration doubles the
//! one-way cell into the round trip and applies the detour-time cap.

use crate::energy::{distance, soc_cost, travel_time, EnergyError};
use crate::scenario::Scenario;

/// Dense per-(UAV, station, waypoint) detour pricing.
///
/// `time` and `soc` hold the one-way waypoint→station leg; `pruned` marks
/// cells excluded from search, either because the waypoint is already flown
/// or because the one-way time exceeds the configured cap.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionCostTensor {
    uav_ids: Vec<String>,
    station_ids: Vec<String>,
    tables: Vec<UavTable>,
}

#[derive(Debug, Clone, PartialEq)]
struct UavTable {
    n_stations: usize,
    n_waypoints: usize,
    /// Row-major `[station][waypoint]`.
    time: Vec<f64>,
    soc: Vec<f64>,
    pruned: Vec<bool>,
}

impl UavTable {
    fn idx(&self, station: usize, waypoint: usize) -> usize {
        debug_assert!(station < self.n_stations && waypoint < self.n_waypoints);
        station * self.n_waypoints + waypoint
    }
}

/// One enumerable swap option for a UAV: detour values cover the full round
/// trip waypoint → station → waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateAction {
    pub station: usize,
    pub waypoint: usize,
    pub soc_detour: f64,
    pub time_detour: f64,
}

impl ActionCostTensor {
    pub fn n_uavs(&self) -> usize {
        self.tables.len()
    }

    pub fn n_stations(&self) -> usize {
        self.station_ids.len()
    }

    pub fn n_waypoints(&self, uav: usize) -> usize {
        self.tables[uav].n_waypoints
    }

    /// One-way waypoint→station flight time, seconds.
    pub fn time(&self, uav: usize, station: usize, waypoint: usize) -> f64 {
        let t = &self.tables[uav];
        t.time[t.idx(station, waypoint)]
    }

    /// One-way waypoint→station charge cost.
    pub fn soc(&self, uav: usize, station: usize, waypoint: usize) -> f64 {
        let t = &self.tables[uav];
        t.soc[t.idx(station, waypoint)]
    }

    pub fn pruned(&self, uav: usize, station: usize, waypoint: usize) -> bool {
        let t = &self.tables[uav];
        t.pruned[t.idx(station, waypoint)]
    }

    /// Debug dump, one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("uav,station,waypoint,time_s,soc,pruned\n");
        for (u, table) in self.tables.iter().enumerate() {
            for s in 0..table.n_stations {
                for w in 0..table.n_waypoints {
                    let i = table.idx(s, w);
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        self.uav_ids[u], self.station_ids[s], w, table.time[i], table.soc[i],
                        table.pruned[i]
                    ));
                }
            }
        }
        out
    }
}

/// Price every candidate cell for `scenario`.
pub fn precompute(scenario: &Scenario) -> Result<ActionCostTensor, EnergyError> {
    let cap = scenario.config.detour_time_cap;
    let mut tables = Vec::with_capacity(scenario.uavs.len());
    for (uav, mission) in scenario.uavs.iter().zip(&scenario.missions) {
        let n_stations = scenario.stations.len();
        let n_waypoints = mission.len();
        let mut time = vec![0.0; n_stations * n_waypoints];
        let mut soc = vec![0.0; n_stations * n_waypoints];
        let mut pruned = vec![false; n_stations * n_waypoints];
        for (s, station) in scenario.stations.iter().enumerate() {
            for (w, wp) in mission.waypoints.iter().enumerate() {
                let i = s * n_waypoints + w;
                let d = distance(wp, &station.position)?;
                let t = travel_time(d, uav.speed)?;
                time[i] = t;
                soc[i] = soc_cost(t, uav.max_flight_time)?;
                pruned[i] = w < mission.completed_count || cap.is_some_and(|c| t > c);
            }
        }
        tables.push(UavTable {
            n_stations,
            n_waypoints,
            time,
            soc,
            pruned,
        });
    }
    Ok(ActionCostTensor {
        uav_ids: scenario.uavs.iter().map(|u| u.id.clone()).collect(),
        station_ids: scenario.stations.iter().map(|s| s.id.clone()).collect(),
        tables,
    })
}

/// Enumerate the non-pruned candidates for `uav` at waypoints at or after
/// `from_waypoint`, ordered by (waypoint, station). Detour values are exactly
/// twice the stored one-way cell.
pub fn candidate_actions(
    tensor: &ActionCostTensor,
    uav: usize,
    from_waypoint: usize,
) -> Vec<CandidateAction> {
    let table = &tensor.tables[uav];
    let mut out = Vec::new();
    for w in from_waypoint..table.n_waypoints {
        for s in 0..table.n_stations {
            let i = table.idx(s, w);
            if !table.pruned[i] {
                out.push(CandidateAction {
                    station: s,
                    waypoint: w,
                    soc_detour: 2.0 * table.soc[i],
                    time_detour: 2.0 * table.time[i],
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Battery, LocalPoint, Mission, Soc, Station, StationState, Uav, UavState,
    };
    use crate::scenario::{generate_random_scenario, PlannerConfig, RandomScenarioParams};

    fn one_uav_scenario(station_pos: (f64, f64), cap: Option<f64>) -> Scenario {
        Scenario {
            uavs: vec![Uav {
                id: "1".into(),
                speed: 5.0,
                max_flight_time: 600.0,
                initial_soc: Soc::FULL,
                start_position: LocalPoint::new2(0.0, 0.0),
                state: UavState::TakingOff,
            }],
            missions: vec![Mission {
                uav_id: "1".into(),
                waypoints: vec![LocalPoint::new2(0.0, 0.0), LocalPoint::new2(100.0, 0.0)],
                completed_count: 0,
            }],
            stations: vec![Station {
                id: "201".into(),
                position: LocalPoint::new2(station_pos.0, station_pos.1),
                slots: 1,
                batteries: vec![Battery {
                    id: "b1".into(),
                    soc: Soc::FULL,
                }],
                replacement_duration: 120.0,
                state: StationState::Idle,
            }],
            config: PlannerConfig {
                detour_time_cap: cap,
                ..PlannerConfig::default()
            },
        }
    }

    #[test]
    fn single_cell_pricing() {
        let s = one_uav_scenario((300.0, 0.0), None);
        let t = precompute(&s).unwrap();
        assert_eq!(t.time(0, 0, 0), 60.0);
        assert_eq!(t.soc(0, 0, 0), 0.1);
        assert!(!t.pruned(0, 0, 0));
    }

    #[test]
    fn colocated_station_costs_nothing() {
        let s = one_uav_scenario((0.0, 0.0), None);
        let t = precompute(&s).unwrap();
        assert_eq!(t.time(0, 0, 0), 0.0);
        assert_eq!(t.soc(0, 0, 0), 0.0);
    }

    #[test]
    fn matches_brute_force_recomputation() {
        let scenario = generate_random_scenario(0, &RandomScenarioParams::default()).unwrap();
        let t = precompute(&scenario).unwrap();
        for (u, (uav, mission)) in scenario.uavs.iter().zip(&scenario.missions).enumerate() {
            for (s, station) in scenario.stations.iter().enumerate() {
                for (w, wp) in mission.waypoints.iter().enumerate() {
                    let dx: f64 = wp
                        .coords
                        .iter()
                        .zip(&station.position.coords)
                        .map(|(a, b)| (b - a) * (b - a))
                        .sum::<f64>()
                        .sqrt();
                    let expect_t = dx / uav.speed;
                    let expect_soc = expect_t / uav.max_flight_time;
                    assert_eq!(t.time(u, s, w), expect_t);
                    assert_eq!(t.soc(u, s, w), expect_soc);
                }
            }
        }
    }

    #[test]
    fn soc_cell_consistent_with_time_cell() {
        let scenario = generate_random_scenario(1, &RandomScenarioParams::default()).unwrap();
        let t = precompute(&scenario).unwrap();
        for u in 0..t.n_uavs() {
            for s in 0..t.n_stations() {
                for w in 0..t.n_waypoints(u) {
                    let expect = t.time(u, s, w) / scenario.uavs[u].max_flight_time;
                    assert_eq!(t.soc(u, s, w), expect);
                }
            }
        }
    }

    #[test]
    fn cap_inclusive_boundary() {
        // One-way time is exactly 60 s; a 60 s cap keeps the cell, anything
        // lower prunes it.
        let keep = precompute(&one_uav_scenario((300.0, 0.0), Some(60.0))).unwrap();
        assert!(!keep.pruned(0, 0, 0));
        let drop = precompute(&one_uav_scenario((300.0, 0.0), Some(59.9))).unwrap();
        assert!(drop.pruned(0, 0, 0));
    }

    #[test]
    fn no_cap_keeps_every_cell() {
        let s = one_uav_scenario((300.0, 0.0), None);
        let t = precompute(&s).unwrap();
        let c = candidate_actions(&t, 0, 0);
        assert_eq!(c.len(), 2); // 1 station × 2 waypoints
    }

    #[test]
    fn zero_cap_keeps_only_colocated() {
        let far = precompute(&one_uav_scenario((300.0, 0.0), Some(0.0))).unwrap();
        assert!(candidate_actions(&far, 0, 0).is_empty());
        let near = precompute(&one_uav_scenario((0.0, 0.0), Some(0.0))).unwrap();
        let c = candidate_actions(&near, 0, 0);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].waypoint, 0);
    }

    #[test]
    fn completed_waypoints_are_pruned() {
        let mut s = one_uav_scenario((300.0, 0.0), None);
        s.missions[0].completed_count = 1;
        let t = precompute(&s).unwrap();
        assert!(t.pruned(0, 0, 0));
        assert!(!t.pruned(0, 0, 1));
    }

    #[test]
    fn round_trip_is_exactly_double() {
        let scenario = generate_random_scenario(2, &RandomScenarioParams::default()).unwrap();
        let t = precompute(&scenario).unwrap();
        for u in 0..t.n_uavs() {
            for c in candidate_actions(&t, u, 0) {
                assert_eq!(c.soc_detour, 2.0 * t.soc(u, c.station, c.waypoint));
                assert_eq!(c.time_detour, 2.0 * t.time(u, c.station, c.waypoint));
            }
        }
    }

    #[test]
    fn lowering_cap_never_adds_candidates() {
        let scenario = generate_random_scenario(3, &RandomScenarioParams::default()).unwrap();
        let caps = [None, Some(240.0), Some(120.0), Some(60.0), Some(0.0)];
        let mut previous: Option<Vec<(usize, usize)>> = None;
        for cap in caps {
            let mut s = scenario.clone();
            s.config.detour_time_cap = cap;
            let t = precompute(&s).unwrap();
            let mut all = vec![];
            for u in 0..t.n_uavs() {
                for c in candidate_actions(&t, u, 0) {
                    all.push((u * 1000 + c.waypoint, c.station));
                }
            }
            if let Some(prev) = &previous {
                assert!(all.iter().all(|x| prev.contains(x)));
                assert!(all.len() <= prev.len());
            }
            previous = Some(all);
        }
    }

    #[test]
    fn candidate_order_deterministic() {
        let scenario = generate_random_scenario(4, &RandomScenarioParams::default()).unwrap();
        let t = precompute(&scenario).unwrap();
        let a = candidate_actions(&t, 0, 10);
        let b = candidate_actions(&t, 0, 10);
        assert_eq!(a, b);
        // Ordered by (waypoint, station).
        for pair in a.windows(2) {
            assert!((pair[0].waypoint, pair[0].station) < (pair[1].waypoint, pair[1].station));
        }
        assert!(a.iter().all(|c| c.waypoint >= 10));
    }

    #[test]
    fn csv_dump_shape() {
        let s = one_uav_scenario((300.0, 0.0), None);
        let t = precompute(&s).unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "uav,station,waypoint,time_s,soc,pruned");
        assert_eq!(lines.len(), 1 + 2);
        assert!(lines[1].starts_with("1,201,0,"));
    }
}
