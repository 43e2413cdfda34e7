//! Plan replay, validation, and rendering.
//!
//! [`simulate`] replays a plan against its scenario through the same energy
//! model the planner used, re-validating every constraint independently:
//! charge floor, station calendars, battery inventories, and agreement with
//! the plan's own predictions. Any disagreement is a [`PlanViolation`] — a
//! planner bug or a tampered plan file, not a user error.
//!
//! The same replay drives the table and CSV renderers that expose a plan as
//! action lists, station schedules, and plot-ready charge timelines.

use serde::{Deserialize, Serialize};

use crate::energy::{distance, soc_cost, travel_time};
use crate::model::{charged_battery_count, LocalPoint, Plan, Soc, SocPoint, SocTimeline};
use crate::scenario::Scenario;
use crate::schedule::Window;

/// What a UAV was doing during the segment that ends at a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Leg,
    DetourOut,
    Swap,
    DetourBack,
    Done,
}

impl Phase {
    fn label(self) -> &'static str {
        match self {
            Phase::Leg => "leg",
            Phase::DetourOut => "detour_out",
            Phase::Swap => "swap",
            Phase::DetourBack => "detour_back",
            Phase::Done => "done",
        }
    }
}

/// One simulated trajectory point; the phase describes the segment that ends
/// here. Charge is piecewise linear between samples and jumps to full only
/// where a swap completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub soc: f64,
    pub position: LocalPoint,
    pub phase: Phase,
}

/// The simulated charge/position history of one UAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub uav_id: String,
    pub samples: Vec<Sample>,
}

/// A constraint broken during plan validation.
#[derive(Debug, thiserror::Error)]
pub enum PlanViolation {
    #[error("uav {uav_id}: charge {soc:.9} below floor {floor} at t={time:.3} s")]
    FloorBreached {
        uav_id: String,
        time: f64,
        soc: f64,
        floor: f64,
    },
    #[error("station {station_id}: {detail}")]
    ScheduleConflict { station_id: String, detail: String },
    #[error("station {station_id}: plan assigns {needed} replacements but only {available} charged batteries")]
    BatteryExhausted {
        station_id: String,
        needed: usize,
        available: usize,
    },
    #[error("plan predictions diverge from simulation: {0}")]
    PredictionMismatch(String),
    #[error("structurally invalid plan: {0}")]
    Structural(String),
}

/// One action as replayed by the simulator, indices in scenario order.
#[derive(Debug, Clone)]
pub(crate) struct ReplayedAction {
    pub station: usize,
    pub waypoint: usize,
    pub depart: f64,
    pub arrival: f64,
    pub release: f64,
    pub window: Window,
}

/// Full replay of one UAV's mission with its assigned swaps.
#[derive(Debug, Clone)]
pub(crate) struct ReplayedUav {
    pub timeline: Timeline,
    pub soc_timeline: SocTimeline,
    pub actions: Vec<ReplayedAction>,
    pub makespan: f64,
    pub consumed: f64,
    pub min_soc_seen: f64,
    pub min_soc_time: f64,
}

/// Replay every UAV's mission with its assigned `(station, waypoint)` swaps,
/// leg by leg through the energy model. Input is indexed in scenario order;
/// waypoints must be strictly increasing per UAV and within the unflown part
/// of the mission.
pub(crate) fn replay(
    scenario: &Scenario,
    per_uav: &[Vec<(usize, usize)>],
) -> Result<Vec<ReplayedUav>, String> {
    if per_uav.len() != scenario.uavs.len() {
        return Err(format!(
            "{} action lists for {} UAVs",
            per_uav.len(),
            scenario.uavs.len()
        ));
    }
    let cfg = &scenario.config;
    let mut out = Vec::with_capacity(scenario.uavs.len());
    for (u, (uav, mission)) in scenario.uavs.iter().zip(&scenario.missions).enumerate() {
        let c = mission.completed_count;
        let n = mission.len();
        for pair in per_uav[u].windows(2) {
            if pair[1].1 <= pair[0].1 {
                return Err(format!(
                    "uav {:?}: swap waypoints must be strictly increasing",
                    uav.id
                ));
            }
        }
        for &(s, w) in &per_uav[u] {
            if s >= scenario.stations.len() {
                return Err(format!("uav {:?}: unknown station index {s}", uav.id));
            }
            if w < c || w >= n {
                return Err(format!(
                    "uav {:?}: swap waypoint {w} outside the unflown mission [{c}, {n})",
                    uav.id
                ));
            }
        }

        let err = |e: crate::energy::EnergyError| format!("uav {:?}: {e}", uav.id);
        let mut samples: Vec<Sample> = Vec::new();
        let push = |samples: &mut Vec<Sample>, s: Sample| {
            // Zero-length segments (co-located points, zero swap duration)
            // collapse into the newest sample to keep times strictly
            // increasing.
            match samples.last_mut() {
                Some(last) if last.time == s.time => *last = s,
                _ => samples.push(s),
            }
        };
        let mut t = 0.0;
        let mut soc = uav.initial_soc.value();
        let mut consumed = 0.0;
        let mut min_soc_seen = soc;
        let mut min_soc_time = 0.0;
        let mut actions = Vec::new();
        let mut next_action = per_uav[u].iter().peekable();

        samples.push(Sample {
            time: 0.0,
            soc,
            position: uav.start_position.clone(),
            phase: Phase::Leg,
        });
        let mut pos = uav.start_position.clone();
        for (w, wp) in mission.waypoints.iter().enumerate().skip(c).take(n - c) {
            let d = distance(&pos, wp).map_err(err)?;
            let dt = travel_time(d, uav.speed).map_err(err)?;
            let dsoc = soc_cost(dt, uav.max_flight_time).map_err(err)?;
            t += dt;
            soc -= dsoc;
            consumed += dsoc;
            if soc < min_soc_seen {
                min_soc_seen = soc;
                min_soc_time = t;
            }
            push(&mut samples, Sample {
                time: t,
                soc,
                position: wp.clone(),
                phase: Phase::Leg,
            });
            if next_action.peek().is_some_and(|&&(_, aw)| aw == w) {
                let &(s, _) = next_action.next().unwrap();
                let station = &scenario.stations[s];
                let d1 = distance(wp, &station.position).map_err(err)?;
                let dt1 = travel_time(d1, uav.speed).map_err(err)?;
                let dsoc1 = soc_cost(dt1, uav.max_flight_time).map_err(err)?;

                let depart = t;
                t += dt1;
                soc -= dsoc1;
                consumed += dsoc1;
                if soc < min_soc_seen {
                    min_soc_seen = soc;
                    min_soc_time = t;
                }
                let arrival = t;
                push(&mut samples, Sample {
                    time: t,
                    soc,
                    position: station.position.clone(),
                    phase: Phase::DetourOut,
                });

                t += station.replacement_duration;
                soc = 1.0;
                let release = t;
                push(&mut samples, Sample {
                    time: t,
                    soc,
                    position: station.position.clone(),
                    phase: Phase::Swap,
                });

                t += dt1;
                soc -= dsoc1;
                consumed += dsoc1;
                if soc < min_soc_seen {
                    min_soc_seen = soc;
                    min_soc_time = t;
                }
                push(&mut samples, Sample {
                    time: t,
                    soc,
                    position: wp.clone(),
                    phase: Phase::DetourBack,
                });

                actions.push(ReplayedAction {
                    station: s,
                    waypoint: w,
                    depart,
                    arrival,
                    release,
                    window: Window::new(
                        (arrival - cfg.safety_margin_before).max(0.0),
                        arrival + station.replacement_duration + cfg.safety_margin_after,
                    ),
                });
            }
            pos = wp.clone();
        }
        if let Some(last) = samples.last_mut() {
            last.phase = Phase::Done;
        }
        let soc_timeline = SocTimeline {
            uav_id: uav.id.clone(),
            points: samples
                .iter()
                .map(|s| SocPoint {
                    time_s: s.time,
                    soc: s.soc,
                })
                .collect(),
        };
        out.push(ReplayedUav {
            timeline: Timeline {
                uav_id: uav.id.clone(),
                samples,
            },
            soc_timeline,
            actions,
            makespan: t,
            consumed,
            min_soc_seen,
            min_soc_time,
        });
    }
    Ok(out)
}

const AGREEMENT_TOL: f64 = 1e-9;

/// Replay `plan` against `scenario` and re-validate every constraint.
///
/// Checks, in order: structural validity, battery inventories, the charge
/// floor over the whole replay, pairwise calendar conflicts, and agreement
/// of every predicted clock, charge value, window, and cost with the replay
/// to 1e-9. Returns the simulated timelines.
pub fn simulate(scenario: &Scenario, plan: &Plan) -> Result<Vec<Timeline>, PlanViolation> {
    let uav_index = |id: &str| scenario.uavs.iter().position(|u| u.id == id);
    let station_index = |id: &str| scenario.stations.iter().position(|s| s.id == id);

    // Structure: known ids, actions sorted by arrival.
    for pair in plan.actions.windows(2) {
        if pair[1].arrival_time < pair[0].arrival_time {
            return Err(PlanViolation::Structural(
                "actions not sorted by arrival_time".to_string(),
            ));
        }
    }
    let mut per_uav: Vec<Vec<(usize, usize)>> = vec![Vec::new(); scenario.uavs.len()];
    let mut plan_actions_by_uav: Vec<Vec<&crate::model::ReplacementAction>> =
        vec![Vec::new(); scenario.uavs.len()];
    for a in &plan.actions {
        let u = uav_index(&a.uav_id)
            .ok_or_else(|| PlanViolation::Structural(format!("unknown uav id {:?}", a.uav_id)))?;
        let s = station_index(&a.station_id).ok_or_else(|| {
            PlanViolation::Structural(format!("unknown station id {:?}", a.station_id))
        })?;
        per_uav[u].push((s, a.waypoint_index));
        plan_actions_by_uav[u].push(a);
    }
    // Replay walks per-UAV actions in waypoint order.
    for (u, list) in per_uav.iter_mut().enumerate() {
        let mut order: Vec<usize> = (0..list.len()).collect();
        order.sort_by_key(|&i| list[i].1);
        *list = order.iter().map(|&i| list[i]).collect();
        plan_actions_by_uav[u] = order
            .iter()
            .map(|&i| plan_actions_by_uav[u][i])
            .collect();
    }

    // Batteries: independent of the replay.
    let full = Soc::new(scenario.config.full_threshold).unwrap_or(Soc::FULL);
    for (s, station) in scenario.stations.iter().enumerate() {
        let needed = per_uav.iter().flatten().filter(|(si, _)| *si == s).count();
        let available = charged_battery_count(station, full);
        if needed > available {
            return Err(PlanViolation::BatteryExhausted {
                station_id: station.id.clone(),
                needed,
                available,
            });
        }
    }

    let replayed = replay(scenario, &per_uav).map_err(PlanViolation::Structural)?;

    // Charge floor over the full replay, including station-arrival dips.
    for (r, uav) in replayed.iter().zip(&scenario.uavs) {
        if r.min_soc_seen < scenario.config.min_soc - AGREEMENT_TOL {
            return Err(PlanViolation::FloorBreached {
                uav_id: uav.id.clone(),
                time: r.min_soc_time,
                soc: r.min_soc_seen,
                floor: scenario.config.min_soc,
            });
        }
    }

    // Station calendars: pairwise conflict check on replayed windows.
    for (s, station) in scenario.stations.iter().enumerate() {
        let windows: Vec<Window> = replayed
            .iter()
            .flat_map(|r| r.actions.iter())
            .filter(|a| a.station == s)
            .map(|a| a.window)
            .collect();
        for i in 0..windows.len() {
            for j in (i + 1)..windows.len() {
                if windows[i].conflicts(&windows[j]) {
                    return Err(PlanViolation::ScheduleConflict {
                        station_id: station.id.clone(),
                        detail: format!(
                            "windows [{:.3}, {:.3}) and [{:.3}, {:.3}) overlap",
                            windows[i].start, windows[i].end, windows[j].start, windows[j].end
                        ),
                    });
                }
            }
        }
        // The plan's published calendar must be the replayed one.
        let published = plan
            .schedules
            .iter()
            .find(|sch| sch.station_id == station.id)
            .map(|sch| sch.windows.clone())
            .unwrap_or_default();
        let mut expected = windows.clone();
        expected.sort_by(|a, b| a.start.total_cmp(&b.start));
        if published.len() != expected.len()
            || published.iter().zip(&expected).any(|(a, b)| {
                (a.start - b.start).abs() > AGREEMENT_TOL || (a.end - b.end).abs() > AGREEMENT_TOL
            })
        {
            return Err(PlanViolation::PredictionMismatch(format!(
                "station {:?} calendar does not match the replayed reservations",
                station.id
            )));
        }
    }

    // Per-action clock agreement.
    for (u, uav) in scenario.uavs.iter().enumerate() {
        let r = &replayed[u];
        if r.actions.len() != plan_actions_by_uav[u].len() {
            return Err(PlanViolation::Structural(format!(
                "uav {:?}: replay produced {} actions for {} planned",
                uav.id,
                r.actions.len(),
                plan_actions_by_uav[u].len()
            )));
        }
        for (ra, pa) in r.actions.iter().zip(&plan_actions_by_uav[u]) {
            for (name, got, want) in [
                ("depart", ra.depart, pa.depart_time),
                ("arrival", ra.arrival, pa.arrival_time),
                ("release", ra.release, pa.release_time),
            ] {
                if (got - want).abs() > AGREEMENT_TOL {
                    return Err(PlanViolation::PredictionMismatch(format!(
                        "uav {:?} waypoint {}: {name} {want:.6} s in plan, {got:.6} s replayed",
                        uav.id, pa.waypoint_index
                    )));
                }
            }
        }
    }

    // Timeline, makespan, and total-cost agreement.
    for (u, uav) in scenario.uavs.iter().enumerate() {
        let r = &replayed[u];
        let published = plan
            .soc_timelines
            .iter()
            .find(|t| t.uav_id == uav.id)
            .ok_or_else(|| {
                PlanViolation::PredictionMismatch(format!("no charge timeline for uav {:?}", uav.id))
            })?;
        if published.points.len() != r.soc_timeline.points.len()
            || published
                .points
                .iter()
                .zip(&r.soc_timeline.points)
                .any(|(a, b)| {
                    (a.time_s - b.time_s).abs() > AGREEMENT_TOL || (a.soc - b.soc).abs() > AGREEMENT_TOL
                })
        {
            return Err(PlanViolation::PredictionMismatch(format!(
                "uav {:?} charge timeline does not match the replay",
                uav.id
            )));
        }
        let published_makespan = plan
            .makespans
            .iter()
            .find(|m| m.uav_id == uav.id)
            .map(|m| m.makespan_s)
            .ok_or_else(|| {
                PlanViolation::PredictionMismatch(format!("no makespan for uav {:?}", uav.id))
            })?;
        if (published_makespan - r.makespan).abs() > AGREEMENT_TOL {
            return Err(PlanViolation::PredictionMismatch(format!(
                "uav {:?} makespan {published_makespan:.6} s in plan, {:.6} s replayed",
                uav.id, r.makespan
            )));
        }
    }
    let consumed: f64 = replayed.iter().map(|r| r.consumed).sum();
    if (consumed - plan.total_soc_cost).abs() > AGREEMENT_TOL {
        return Err(PlanViolation::PredictionMismatch(format!(
            "total cost {} in plan, {consumed} replayed",
            plan.total_soc_cost
        )));
    }

    Ok(replayed.into_iter().map(|r| r.timeline).collect())
}

/// Format seconds as `M:SS.cc`, minutes unbounded (an hour prints as 61:…).
pub fn fmt_min_sec(seconds: f64) -> String {
    let centis = (seconds * 100.0).round() as i64;
    let mins = centis.div_euclid(6000);
    let rem = centis.rem_euclid(6000);
    format!("{}:{:02}.{:02}", mins, rem / 100, rem % 100)
}

fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |cells: &[String], widths: &[usize]| -> String {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let header_cells: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    out.push_str(&fmt_row(&header_cells, &widths));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row, &widths));
        out.push('\n');
    }
    out
}

/// Render the committed actions, one row per swap, sorted by
/// (uav_id, waypoint_index).
pub fn action_table(plan: &Plan) -> String {
    let mut rows: Vec<&crate::model::ReplacementAction> = plan.actions.iter().collect();
    rows.sort_by(|a, b| {
        id_sort_key(&a.uav_id)
            .cmp(&id_sort_key(&b.uav_id))
            .then_with(|| a.waypoint_index.cmp(&b.waypoint_index))
    });
    render_table(
        &["UAV ID", "Station ID", "WP Index"],
        &rows
            .iter()
            .map(|a| {
                vec![
                    a.uav_id.clone(),
                    a.station_id.clone(),
                    a.waypoint_index.to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    )
}

/// Render the station calendars, one row per reserved window, sorted by
/// (station_id, start), times as `M:SS.cc`.
pub fn schedule_table(plan: &Plan) -> String {
    let mut rows: Vec<(String, Window)> = plan
        .schedules
        .iter()
        .flat_map(|s| s.windows.iter().map(|w| (s.station_id.clone(), *w)))
        .collect();
    rows.sort_by(|a, b| {
        id_sort_key(&a.0)
            .cmp(&id_sort_key(&b.0))
            .then_with(|| a.1.start.total_cmp(&b.1.start))
    });
    render_table(
        &["Station ID", "Start", "End"],
        &rows
            .iter()
            .map(|(id, w)| vec![id.clone(), fmt_min_sec(w.start), fmt_min_sec(w.end)])
            .collect::<Vec<_>>(),
    )
}

// Numeric ids sort numerically, everything else lexicographically after.
fn id_sort_key(id: &str) -> (u8, u64, String) {
    match id.parse::<u64>() {
        Ok(n) => (0, n, String::new()),
        Err(_) => (1, 0, id.to_string()),
    }
}

/// Render timelines as CSV: `time_s,uav_id,soc,phase`, one row per sample.
pub fn soc_csv(timelines: &[Timeline]) -> String {
    let mut out = String::from("time_s,uav_id,soc,phase\n");
    for t in timelines {
        for s in &t.samples {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.time, t.uav_id, s.soc,
                s.phase.label()
            ));
        }
    }
    out
}

/// Per-station replacement count for the run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationLoad {
    pub station_id: String,
    pub replacements: usize,
}

/// Headline numbers of one planning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub total_soc_cost: f64,
    pub action_count: usize,
    pub makespans: Vec<crate::model::UavMakespan>,
    pub replacements_per_station: Vec<StationLoad>,
}

/// Summarize a plan: total cost, per-UAV makespans, and the per-station
/// replacement histogram (stations with zero swaps included).
pub fn summarize(plan: &Plan) -> ReportSummary {
    ReportSummary {
        total_soc_cost: plan.total_soc_cost,
        action_count: plan.actions.len(),
        makespans: plan.makespans.clone(),
        replacements_per_station: plan
            .schedules
            .iter()
            .map(|s| StationLoad {
                station_id: s.station_id.clone(),
                replacements: plan
                    .actions
                    .iter()
                    .filter(|a| a.station_id == s.station_id)
                    .count(),
            })
            .collect(),
    }
}
