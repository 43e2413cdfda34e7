//! Best-first search for the minimum-consumption replacement plan.
//!
//! A search vertex holds, for every UAV, how many mission waypoints it has
//! flown, its charge and clock at that point, plus the per-station battery
//! inventories and reservation calendars. An edge commits one decision for
//! one UAV: either a battery swap at a chosen (station, waypoint), with the
//! intervening mission legs collapsed into the edge, or a direct run to the
//! end of its mission when that is already feasible. Cost is the total state
//! of charge consumed by the whole fleet since scenario start, and the
//! heuristic is the charge still needed to fly every remaining mission leg
//! with no detours, which never overestimates.
//!
//! The open list is a binary heap ordered by `f = g + h`, ties broken toward
//! larger `g` and then insertion order, so runs are deterministic. Explored
//! states are memoized under a quantized key (progress, inventories, charge
//! and clocks to 1e-6 / 1 ms, reserved window starts to 1 ms); a state seen
//! again at no better cost is skipped. Vertices live in an arena as (parent,
//! move) records and are replayed on demand, which keeps the frontier small
//! enough for long runs.
//!
//! [`brute_force_plan`] is an independent exhaustive oracle for small
//! instances: it enumerates per-UAV action sequences outright, joins them
//! under the same battery and calendar rules, and returns the cheapest
//! combination. Costs are folded in a canonical order in both engines, so on
//! oracle-sized instances the two report bitwise-equal optima.

use std::collections::hash_map::{DefaultHasher, Entry};
use std::collections::{BinaryHeap, HashMap};
use std::hash::Hasher;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::actions::{candidate_actions, precompute, ActionCostTensor};
use crate::energy::{distance, mission_profile, travel_time, EnergyError, MissionProfile};
use crate::model::{charged_battery_count, Plan, ReplacementAction, Soc};
use crate::report::replay;
use crate::scenario::{Scenario, ScenarioError};
use crate::schedule::{StationSchedule, Window};

/// Default wall-clock budget for one search, seconds.
pub const DEFAULT_TIMEOUT_S: f64 = 600.0;

const NO_PARENT: u32 = u32::MAX;

/// Errors from planning.
#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("no feasible replacement plan exists for this scenario")]
    Infeasible,
    #[error("search exceeded its {0} s wall-clock budget")]
    Timeout(f64),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Counters describing one search run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Vertices popped and expanded.
    pub expanded: u64,
    /// Children constructed (feasible moves applied).
    pub generated: u64,
    /// Children or pops skipped because the state was already known at no
    /// worse cost.
    pub duplicates_skipped: u64,
    #[serde(rename = "wall_time_s")]
    pub wall_time: f64,
    pub peak_open_size: u64,
}

/// One search state, exposed for inspection and tests. `progress[u]` counts
/// the waypoints UAV `u` has flown; `soc_now[u]` and `clock[u]` describe it
/// at that point. Only states whose every unfinished UAV is at or above the
/// charge floor are ever constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub progress: Vec<usize>,
    pub soc_now: Vec<f64>,
    pub clock: Vec<f64>,
    pub charged_counts: Vec<u32>,
    pub schedules: Vec<StationSchedule>,
    pub committed: Vec<ReplacementAction>,
    /// Total charge consumed by the fleet so far.
    pub g: f64,
    /// Per-UAV detour consumption folded in commit order (bookkeeping for
    /// the canonical cost computation).
    pub detour_soc: Vec<f64>,
}

/// One committed search move.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    Swap { uav: u16, station: u16, waypoint: u32 },
    Finish { uav: u16 },
}

struct NodeRec {
    parent: u32,
    mv: Move,
}

/// Lean search state used inside [`plan`]; no ids, no committed history.
#[derive(Clone)]
struct LeanState {
    progress: Vec<u32>,
    soc: Vec<f64>,
    clock: Vec<f64>,
    detour: Vec<f64>,
    charged: Vec<u16>,
    calendars: Vec<Vec<Window>>,
}

struct UavCtx {
    soc0: f64,
    start_progress: usize,
    n: usize,
    /// Cumulative mission-leg time from the start position to waypoint
    /// `start_progress + k`, seconds.
    cum_time: Vec<f64>,
    /// `cum_time` scaled by `1 / t_max`.
    cum_soc: Vec<f64>,
}

impl UavCtx {
    fn offset(&self, waypoint: usize) -> usize {
        waypoint - self.start_progress
    }

    /// Mission-leg time from the position at `progress` to waypoint `w`.
    fn leg_time(&self, progress: usize, w: usize) -> f64 {
        if progress == self.start_progress {
            self.cum_time[self.offset(w)]
        } else {
            self.cum_time[self.offset(w)] - self.cum_time[self.offset(progress - 1)]
        }
    }

    fn leg_soc(&self, progress: usize, w: usize) -> f64 {
        if progress == self.start_progress {
            self.cum_soc[self.offset(w)]
        } else {
            self.cum_soc[self.offset(w)] - self.cum_soc[self.offset(progress - 1)]
        }
    }

    /// Charge spent on mission legs up to `progress`, from precomputed
    /// prefixes (canonical: no re-summation).
    fn consumed_mission(&self, progress: usize) -> f64 {
        if progress == self.start_progress {
            0.0
        } else {
            self.cum_soc[self.offset(progress - 1)]
        }
    }

    /// Charge needed to fly the remaining legs, no detours.
    fn remaining(&self, progress: usize) -> f64 {
        match self.cum_soc.last() {
            None => 0.0,
            Some(&total) => total - self.consumed_mission(progress),
        }
    }
}

struct StationCtx {
    duration: f64,
    charged0: u16,
}

/// Everything [`plan`] precomputes for one scenario: the priced action
/// tensor, per-UAV cumulative leg tables, and station inventories. Exposes
/// the search building blocks for tests and tooling.
pub struct SearchContext<'a> {
    scenario: &'a Scenario,
    tensor: ActionCostTensor,
    uavs: Vec<UavCtx>,
    stations: Vec<StationCtx>,
    min_soc: f64,
}

/// Values derived when evaluating one candidate swap, shared by the search
/// and the brute-force oracle so both apply identical arithmetic.
#[derive(Debug, Clone, Copy)]
struct SwapEval {
    depart: f64,
    arrival: f64,
    release: f64,
    clock_after: f64,
    soc_after: f64,
    window: Window,
    /// Round-trip detour charge, exactly twice the one-way cell.
    detour_soc: f64,
}

impl<'a> SearchContext<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self, PlanError> {
        scenario.validate()?;
        let tensor = precompute(scenario)?;
        let full = Soc::new(scenario.config.full_threshold)
            .unwrap_or(Soc::FULL);
        let mut uavs = Vec::with_capacity(scenario.uavs.len());
        for (uav, mission) in scenario.uavs.iter().zip(&scenario.missions) {
            let c = mission.completed_count;
            let n = mission.len();
            let mut cum_time = Vec::with_capacity(n - c);
            let mut cum_soc = Vec::with_capacity(n - c);
            let mut t = 0.0;
            let mut pos = &uav.start_position;
            for wp in &mission.waypoints[c..] {
                let d = distance(pos, wp)?;
                t += travel_time(d, uav.speed)?;
                cum_time.push(t);
                cum_soc.push(t / uav.max_flight_time);
                pos = wp;
            }
            uavs.push(UavCtx {
                soc0: uav.initial_soc.value(),
                start_progress: c,
                n,
                cum_time,
                cum_soc,
            });
        }
        let stations = scenario
            .stations
            .iter()
            .map(|s| StationCtx {
                duration: s.replacement_duration,
                charged0: charged_battery_count(s, full).min(u16::MAX as usize) as u16,
            })
            .collect();
        Ok(SearchContext {
            scenario,
            tensor,
            uavs,
            stations,
            min_soc: scenario.config.min_soc,
        })
    }

    pub fn tensor(&self) -> &ActionCostTensor {
        &self.tensor
    }

    /// Detour-free per-UAV profiles from each UAV's starting state.
    pub fn baseline_profiles(&self) -> Result<Vec<MissionProfile>, EnergyError> {
        self.scenario
            .uavs
            .iter()
            .zip(&self.scenario.missions)
            .map(|(u, m)| {
                mission_profile(
                    u,
                    m,
                    m.completed_count,
                    u.initial_soc.value(),
                    0.0,
                    &u.start_position,
                )
            })
            .collect()
    }

    fn lean_start(&self) -> LeanState {
        LeanState {
            progress: self.uavs.iter().map(|u| u.start_progress as u32).collect(),
            soc: self.uavs.iter().map(|u| u.soc0).collect(),
            clock: vec![0.0; self.uavs.len()],
            detour: vec![0.0; self.uavs.len()],
            charged: self.stations.iter().map(|s| s.charged0).collect(),
            calendars: vec![Vec::new(); self.stations.len()],
        }
    }

    fn is_goal_lean(&self, st: &LeanState) -> bool {
        st.progress
            .iter()
            .zip(&self.uavs)
            .all(|(&p, u)| p as usize == u.n)
    }

    /// Total charge consumed at `st`, folded canonically (UAV order, each
    /// UAV's mission prefix plus its detour accumulator).
    fn g_of(&self, st: &LeanState) -> f64 {
        let mut g = 0.0;
        for (u, uc) in self.uavs.iter().enumerate() {
            g += uc.consumed_mission(st.progress[u] as usize) + st.detour[u];
        }
        g
    }

    /// Admissible remaining-cost estimate: charge for every remaining
    /// mission leg, detours excluded.
    fn h_of(&self, st: &LeanState) -> f64 {
        let mut h = 0.0;
        for (u, uc) in self.uavs.iter().enumerate() {
            h += uc.remaining(st.progress[u] as usize);
        }
        h
    }

    /// Quantized state fingerprint: progress, inventories, charge to 1e-6,
    /// clocks and reserved window starts to 1 ms, hashed twice with
    /// different salts into 128 bits.
    fn key_of(&self, st: &LeanState) -> u128 {
        let mut h1 = DefaultHasher::new();
        let mut h2 = DefaultHasher::new();
        h2.write_u64(0x9E37_79B9_7F4A_7C15);
        for h in [&mut h1, &mut h2] {
            for &p in &st.progress {
                h.write_u32(p);
            }
            for &c in &st.charged {
                h.write_u16(c);
            }
            for &s in &st.soc {
                h.write_i64(quantize(s, 1e-6));
            }
            for &t in &st.clock {
                h.write_i64(quantize(t, 1e-3));
            }
            for cal in &st.calendars {
                h.write_usize(cal.len());
                for w in cal {
                    h.write_i64(quantize(w.start, 1e-3));
                }
            }
        }
        ((h1.finish() as u128) << 64) | h2.finish() as u128
    }

    /// Price one candidate swap from a given UAV state: mission legs to the
    /// waypoint, the one-way station leg, the swap, and the return leg.
    /// `None` when the cell is pruned or the charge floor would be crossed
    /// on the way to the station or back. Joint resources (batteries,
    /// calendars) are the caller's concern.
    fn eval_swap(
        &self,
        u: usize,
        progress: usize,
        soc: f64,
        clock: f64,
        station: usize,
        waypoint: usize,
    ) -> Option<SwapEval> {
        let uc = &self.uavs[u];
        debug_assert!(waypoint >= progress && waypoint < uc.n);
        if self.tensor.pruned(u, station, waypoint) {
            return None;
        }
        let oneway_soc = self.tensor.soc(u, station, waypoint);
        let soc_at_station = soc - uc.leg_soc(progress, waypoint) - oneway_soc;
        if soc_at_station < self.min_soc {
            return None;
        }
        let soc_after = 1.0 - oneway_soc;
        if soc_after < self.min_soc {
            return None;
        }
        let oneway_time = self.tensor.time(u, station, waypoint);
        let depart = clock + uc.leg_time(progress, waypoint);
        let arrival = depart + oneway_time;
        let duration = self.stations[station].duration;
        let cfg = &self.scenario.config;
        let window = Window::new(
            (arrival - cfg.safety_margin_before).max(0.0),
            arrival + duration + cfg.safety_margin_after,
        );
        Some(SwapEval {
            depart,
            arrival,
            release: arrival + duration,
            clock_after: arrival + duration + oneway_time,
            soc_after,
            window,
            detour_soc: 2.0 * oneway_soc,
        })
    }

    /// Charge and clock after running straight to the mission end, or `None`
    /// when the floor would be crossed (i.e. the UAV is not finishable).
    fn eval_finish(&self, u: usize, progress: usize, soc: f64, clock: f64) -> Option<(f64, f64)> {
        let uc = &self.uavs[u];
        let soc_after = soc - uc.remaining(progress);
        if soc_after < self.min_soc {
            return None;
        }
        let clock_after = if progress == uc.n {
            clock
        } else {
            clock + uc.leg_time(progress, uc.n - 1)
        };
        Some((soc_after, clock_after))
    }

    /// Apply one move to a state, checking full feasibility (floor, battery
    /// inventory, calendar). `None` when the move is not feasible.
    fn apply(&self, st: &LeanState, mv: Move) -> Option<LeanState> {
        match mv {
            Move::Finish { uav } => {
                let u = uav as usize;
                let p = st.progress[u] as usize;
                if p == self.uavs[u].n {
                    return None;
                }
                let (soc_after, clock_after) = self.eval_finish(u, p, st.soc[u], st.clock[u])?;
                let mut child = st.clone();
                child.progress[u] = self.uavs[u].n as u32;
                child.soc[u] = soc_after;
                child.clock[u] = clock_after;
                Some(child)
            }
            Move::Swap { uav, station, waypoint } => {
                let (u, s, w) = (uav as usize, station as usize, waypoint as usize);
                if st.charged[s] == 0 {
                    return None;
                }
                let ev = self.eval_swap(u, st.progress[u] as usize, st.soc[u], st.clock[u], s, w)?;
                if !st.calendars[s].iter().all(|x| !x.conflicts(&ev.window)) {
                    return None;
                }
                let mut child = st.clone();
                child.progress[u] = (w + 1) as u32;
                child.soc[u] = ev.soc_after;
                child.clock[u] = ev.clock_after;
                child.detour[u] += ev.detour_soc;
                child.charged[s] -= 1;
                let cal = &mut child.calendars[s];
                let at = cal.partition_point(|x| (x.start, x.end) < (ev.window.start, ev.window.end));
                cal.insert(at, ev.window);
                Some(child)
            }
        }
    }

    /// All feasible children of a state. A UAV that can already finish
    /// contributes exactly its finishing move; an unfinished UAV with no
    /// feasible move at all dooms the state (inventories only shrink and
    /// calendars only fill along any continuation), so such a state has no
    /// children.
    fn lean_children(&self, st: &LeanState) -> Vec<(Move, LeanState)> {
        let mut out = Vec::new();
        for (u, uc) in self.uavs.iter().enumerate() {
            let p = st.progress[u] as usize;
            if p == uc.n {
                continue;
            }
            let finish = Move::Finish { uav: u as u16 };
            if let Some(child) = self.apply(st, finish) {
                out.push((finish, child));
                continue;
            }
            let before = out.len();
            for cand in candidate_actions(&self.tensor, u, p) {
                let mv = Move::Swap {
                    uav: u as u16,
                    station: cand.station as u16,
                    waypoint: cand.waypoint as u32,
                };
                if let Some(child) = self.apply(st, mv) {
                    out.push((mv, child));
                }
            }
            if out.len() == before {
                return Vec::new();
            }
        }
        out
    }

    fn reconstruct(&self, arena: &[NodeRec], node: u32) -> LeanState {
        let mut chain = Vec::new();
        let mut cur = node;
        while arena[cur as usize].parent != NO_PARENT {
            chain.push(arena[cur as usize].mv);
            cur = arena[cur as usize].parent;
        }
        let mut st = self.lean_start();
        for mv in chain.into_iter().rev() {
            st = self
                .apply(&st, mv)
                .expect("recorded moves replay deterministically");
        }
        st
    }

    fn moves_of(&self, arena: &[NodeRec], node: u32) -> Vec<Move> {
        let mut chain = Vec::new();
        let mut cur = node;
        while arena[cur as usize].parent != NO_PARENT {
            chain.push(arena[cur as usize].mv);
            cur = arena[cur as usize].parent;
        }
        chain.reverse();
        chain
    }

    // ---- public vertex API -------------------------------------------------

    /// The search root: every UAV at its starting progress, full station
    /// inventories, empty calendars.
    pub fn start_vertex(&self) -> Vertex {
        self.to_vertex(&self.lean_start(), Vec::new())
    }

    pub fn is_goal(&self, v: &Vertex) -> bool {
        v.progress
            .iter()
            .zip(&self.uavs)
            .all(|(&p, u)| p == u.n)
    }

    /// Sum over UAVs of the charge still needed to finish every mission with
    /// no detours. Zero exactly at goal vertices.
    pub fn heuristic(&self, v: &Vertex) -> f64 {
        let mut h = 0.0;
        for (u, uc) in self.uavs.iter().enumerate() {
            h += uc.remaining(v.progress[u]);
        }
        h
    }

    /// True iff flying the remaining legs keeps the UAV at or above the
    /// charge floor through its final waypoint (the floor is inclusive).
    pub fn finishable_without_replacement(&self, v: &Vertex, uav: usize) -> bool {
        self.eval_finish(uav, v.progress[uav], v.soc_now[uav], v.clock[uav])
            .is_some()
    }

    /// All feasible children of `v`, in deterministic order (UAV index, then
    /// waypoint, then station).
    pub fn expand(&self, v: &Vertex) -> Vec<Vertex> {
        let lean = self.to_lean(v);
        self.lean_children(&lean)
            .into_iter()
            .map(|(mv, child)| {
                let mut committed = v.committed.clone();
                if let Move::Swap { uav, station, waypoint } = mv {
                    let (u, s, w) = (uav as usize, station as usize, waypoint as usize);
                    let ev = self
                        .eval_swap(u, v.progress[u], v.soc_now[u], v.clock[u], s, w)
                        .expect("move came from a feasible expansion");
                    committed.push(ReplacementAction {
                        uav_id: self.scenario.uavs[u].id.clone(),
                        station_id: self.scenario.stations[s].id.clone(),
                        waypoint_index: w,
                        depart_time: ev.depart,
                        arrival_time: ev.arrival,
                        release_time: ev.release,
                    });
                }
                self.to_vertex(&child, committed)
            })
            .collect()
    }

    fn to_lean(&self, v: &Vertex) -> LeanState {
        LeanState {
            progress: v.progress.iter().map(|&p| p as u32).collect(),
            soc: v.soc_now.clone(),
            clock: v.clock.clone(),
            detour: v.detour_soc.clone(),
            charged: v.charged_counts.iter().map(|&c| c as u16).collect(),
            calendars: v.schedules.iter().map(|s| s.windows.clone()).collect(),
        }
    }

    fn to_vertex(&self, st: &LeanState, committed: Vec<ReplacementAction>) -> Vertex {
        Vertex {
            progress: st.progress.iter().map(|&p| p as usize).collect(),
            soc_now: st.soc.clone(),
            clock: st.clock.clone(),
            charged_counts: st.charged.iter().map(|&c| c as u32).collect(),
            schedules: st
                .calendars
                .iter()
                .zip(&self.scenario.stations)
                .map(|(cal, station)| StationSchedule {
                    station_id: station.id.clone(),
                    windows: cal.clone(),
                })
                .collect(),
            committed,
            g: self.g_of(st),
            detour_soc: st.detour.clone(),
        }
    }

    /// Convert the moves of a solved search into a full [`Plan`] by
    /// replaying them through the energy model.
    fn build_plan(&self, moves: &[Move], total: f64) -> Plan {
        let mut per_uav: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.uavs.len()];
        for mv in moves {
            if let Move::Swap { uav, station, waypoint } = mv {
                per_uav[*uav as usize].push((*station as usize, *waypoint as usize));
            }
        }
        build_plan_from_actions(self.scenario, &per_uav, total)
    }
}

fn quantize(x: f64, quantum: f64) -> i64 {
    (x / quantum).round() as i64
}

/// Build the exported plan for a chosen per-UAV action assignment by
/// replaying it leg by leg. All plan numbers (action times, calendars,
/// timelines, makespans) come from the replay so that a later simulation
/// reproduces them exactly; the total is the canonical search cost.
fn build_plan_from_actions(
    scenario: &Scenario,
    per_uav: &[Vec<(usize, usize)>],
    total: f64,
) -> Plan {
    let replayed = replay(scenario, per_uav).expect("planned actions replay cleanly");

    let mut actions = Vec::new();
    let mut schedules: Vec<StationSchedule> = scenario
        .stations
        .iter()
        .map(|s| StationSchedule::new(s.id.clone()))
        .collect();
    for (u, r) in replayed.iter().enumerate() {
        for a in &r.actions {
            actions.push(ReplacementAction {
                uav_id: scenario.uavs[u].id.clone(),
                station_id: scenario.stations[a.station].id.clone(),
                waypoint_index: a.waypoint,
                depart_time: a.depart,
                arrival_time: a.arrival,
                release_time: a.release,
            });
            let cal = &mut schedules[a.station].windows;
            let at = cal.partition_point(|x| (x.start, x.end) < (a.window.start, a.window.end));
            cal.insert(at, a.window);
        }
    }
    actions.sort_by(|a, b| {
        a.arrival_time
            .total_cmp(&b.arrival_time)
            .then_with(|| a.uav_id.cmp(&b.uav_id))
            .then_with(|| a.waypoint_index.cmp(&b.waypoint_index))
    });

    Plan {
        actions,
        schedules,
        soc_timelines: replayed.iter().map(|r| r.soc_timeline.clone()).collect(),
        total_soc_cost: total,
        makespans: replayed
            .iter()
            .zip(&scenario.uavs)
            .map(|(r, u)| crate::model::UavMakespan {
                uav_id: u.id.clone(),
                makespan_s: r.makespan,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenEntry {
    f: f64,
    g: f64,
    seq: u32,
    node: u32,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    // BinaryHeap pops the greatest entry; make "greatest" mean smallest f,
    // then largest g (deeper first), then FIFO.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Find the minimum-total-consumption replacement plan for `scenario`.
///
/// Returns the plan of the first goal state popped, which is optimal because
/// the heuristic never overestimates. `Infeasible` when the search space is
/// exhausted, `Timeout` when the wall-clock budget (scenario config, default
/// [`DEFAULT_TIMEOUT_S`]) runs out.
pub fn plan(scenario: &Scenario) -> Result<(Plan, SearchStats), PlanError> {
    let started = Instant::now();
    let ctx = SearchContext::new(scenario)?;
    let timeout = scenario.config.timeout.unwrap_or(DEFAULT_TIMEOUT_S);

    let start = ctx.lean_start();
    for (u, uc) in ctx.uavs.iter().enumerate() {
        if (start.progress[u] as usize) < uc.n && start.soc[u] < ctx.min_soc {
            return Err(PlanError::Infeasible);
        }
    }

    let mut stats = SearchStats::default();
    let mut arena = vec![NodeRec {
        parent: NO_PARENT,
        mv: Move::Finish { uav: u16::MAX },
    }];
    let mut heap = BinaryHeap::new();
    let mut best_g: HashMap<u128, f64> = HashMap::new();

    let g0 = ctx.g_of(&start);
    best_g.insert(ctx.key_of(&start), g0);
    heap.push(OpenEntry {
        f: g0 + ctx.h_of(&start),
        g: g0,
        seq: 0,
        node: 0,
    });
    stats.generated = 1;
    stats.peak_open_size = 1;
    let mut seq: u32 = 1;

    while let Some(entry) = heap.pop() {
        if started.elapsed().as_secs_f64() > timeout {
            return Err(PlanError::Timeout(timeout));
        }
        let st = ctx.reconstruct(&arena, entry.node);
        if best_g
            .get(&ctx.key_of(&st))
            .is_some_and(|&bg| entry.g > bg)
        {
            stats.duplicates_skipped += 1;
            continue;
        }
        if ctx.is_goal_lean(&st) {
            stats.wall_time = started.elapsed().as_secs_f64();
            let plan = ctx.build_plan(&ctx.moves_of(&arena, entry.node), entry.g);
            return Ok((plan, stats));
        }
        stats.expanded += 1;
        for (mv, child) in ctx.lean_children(&st) {
            stats.generated += 1;
            let cg = ctx.g_of(&child);
            match best_g.entry(ctx.key_of(&child)) {
                Entry::Occupied(mut e) => {
                    if *e.get() <= cg {
                        stats.duplicates_skipped += 1;
                        continue;
                    }
                    e.insert(cg);
                }
                Entry::Vacant(e) => {
                    e.insert(cg);
                }
            }
            arena.push(NodeRec {
                parent: entry.node,
                mv,
            });
            heap.push(OpenEntry {
                f: cg + ctx.h_of(&child),
                g: cg,
                seq,
                node: (arena.len() - 1) as u32,
            });
            seq = seq.wrapping_add(1);
            stats.peak_open_size = stats.peak_open_size.max(heap.len() as u64);
        }
    }
    Err(PlanError::Infeasible)
}

/// Exhaustive optimality oracle for small instances.
///
/// Enumerates every per-UAV sequence of at most `max_actions_per_uav` swaps
/// that keeps the UAV above the charge floor and lets it finish, then joins
/// sequences across UAVs under the shared battery-inventory and calendar
/// rules, and returns the cheapest feasible combination. Applies the same
/// per-action arithmetic as [`plan`], so on instances whose optimum fits the
/// bound the two return exactly equal costs.
pub fn brute_force_plan(
    scenario: &Scenario,
    max_actions_per_uav: usize,
) -> Result<Plan, PlanError> {
    let ctx = SearchContext::new(scenario)?;
    let start = ctx.lean_start();
    for (u, uc) in ctx.uavs.iter().enumerate() {
        if (start.progress[u] as usize) < uc.n && start.soc[u] < ctx.min_soc {
            return Err(PlanError::Infeasible);
        }
    }

    struct Solo {
        seq: Vec<(usize, usize)>,
        windows: Vec<(usize, Window)>,
        detour: f64,
    }

    // Depth-first enumeration of one UAV's feasible swap sequences.
    fn dfs(
        ctx: &SearchContext,
        u: usize,
        progress: usize,
        soc: f64,
        clock: f64,
        max_actions: usize,
        acc: &mut Vec<((usize, usize), Window)>,
        detour: f64,
        out: &mut Vec<Solo>,
    ) {
        if ctx.eval_finish(u, progress, soc, clock).is_some() {
            out.push(Solo {
                seq: acc.iter().map(|(sw, _)| *sw).collect(),
                windows: acc.iter().map(|((s, _), w)| (*s, *w)).collect(),
                detour,
            });
        }
        if acc.len() == max_actions {
            return;
        }
        for cand in candidate_actions(ctx.tensor(), u, progress) {
            if let Some(ev) = ctx.eval_swap(u, progress, soc, clock, cand.station, cand.waypoint) {
                acc.push(((cand.station, cand.waypoint), ev.window));
                dfs(
                    ctx,
                    u,
                    cand.waypoint + 1,
                    ev.soc_after,
                    ev.clock_after,
                    max_actions,
                    acc,
                    detour + ev.detour_soc,
                    out,
                );
                acc.pop();
            }
        }
    }

    let mut solos: Vec<Vec<Solo>> = Vec::with_capacity(ctx.uavs.len());
    for (u, uc) in ctx.uavs.iter().enumerate() {
        let mut out = Vec::new();
        if uc.start_progress == uc.n {
            out.push(Solo {
                seq: Vec::new(),
                windows: Vec::new(),
                detour: 0.0,
            });
        } else {
            let mut acc = Vec::new();
            dfs(
                &ctx,
                u,
                uc.start_progress,
                uc.soc0,
                0.0,
                max_actions_per_uav,
                &mut acc,
                0.0,
                &mut out,
            );
        }
        if out.is_empty() {
            return Err(PlanError::Infeasible);
        }
        solos.push(out);
    }

    // Join one sequence per UAV under shared batteries and calendars.
    struct Best {
        cost: f64,
        picks: Vec<usize>,
    }

    fn joint(
        ctx: &SearchContext,
        solos: &[Vec<Solo>],
        u: usize,
        used: &mut Vec<u16>,
        calendars: &mut Vec<Vec<Window>>,
        picks: &mut Vec<usize>,
        best: &mut Option<Best>,
    ) {
        if u == solos.len() {
            let mut cost = 0.0;
            for (i, uc) in ctx.uavs.iter().enumerate() {
                cost += uc.consumed_mission(uc.n) + solos[i][picks[i]].detour;
            }
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                *best = Some(Best {
                    cost,
                    picks: picks.clone(),
                });
            }
            return;
        }
        'next_solo: for (i, solo) in solos[u].iter().enumerate() {
            for &(s, _) in &solo.windows {
                if used[s] as usize + solo.windows.iter().filter(|(s2, _)| *s2 == s).count()
                    > ctx.stations[s].charged0 as usize
                {
                    continue 'next_solo;
                }
            }
            for &(s, w) in &solo.windows {
                if calendars[s].iter().any(|x| x.conflicts(&w)) {
                    continue 'next_solo;
                }
            }
            // Self-conflicts within one sequence at the same station.
            for a in 0..solo.windows.len() {
                for b in (a + 1)..solo.windows.len() {
                    if solo.windows[a].0 == solo.windows[b].0
                        && solo.windows[a].1.conflicts(&solo.windows[b].1)
                    {
                        continue 'next_solo;
                    }
                }
            }
            for &(s, w) in &solo.windows {
                used[s] += 1;
                calendars[s].push(w);
            }
            picks.push(i);
            joint(ctx, solos, u + 1, used, calendars, picks, best);
            picks.pop();
            for &(s, _) in &solo.windows {
                used[s] -= 1;
                calendars[s].pop();
            }
        }
    }

    let mut best = None;
    let mut used = vec![0u16; ctx.stations.len()];
    let mut calendars = vec![Vec::new(); ctx.stations.len()];
    let mut picks = Vec::new();
    joint(&ctx, &solos, 0, &mut used, &mut calendars, &mut picks, &mut best);

    let best = best.ok_or(PlanError::Infeasible)?;
    let per_uav: Vec<Vec<(usize, usize)>> = best
        .picks
        .iter()
        .enumerate()
        .map(|(u, &i)| solos[u][i].seq.clone())
        .collect();
    Ok(build_plan_from_actions(ctx.scenario, &per_uav, best.cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LocalPoint, UavState};
    use crate::test_support::{scenario, straight_line, two_uav_one_station, UavSpec};

    #[test]
    fn heuristic_sums_remaining_legs() {
        // Two 300 m legs at 5 m/s with 600 s endurance: 0.1 each.
        let s = scenario(
            vec![UavSpec {
                speed: 5.0,
                t_max: 600.0,
                soc0: 1.0,
                start: (0.0, 0.0),
                waypoints: straight_line(2, 300.0, 0.0),
            }],
            vec![((450.0, 0.0), 1)],
        );
        let ctx = SearchContext::new(&s).unwrap();
        let v = ctx.start_vertex();
        assert!((ctx.heuristic(&v) - 0.2).abs() < 1e-15);
        let children = ctx.expand(&v);
        assert_eq!(children.len(), 1); // finishable: one finishing child
        let goal = &children[0];
        assert!(ctx.is_goal(goal));
        assert_eq!(ctx.heuristic(goal), 0.0);
    }

    #[test]
    fn finishable_arithmetic() {
        // Remaining cost 0.2 (600 m at 5 m/s on 600 s endurance).
        let base = |soc0: f64, n: usize| {
            scenario(
                vec![UavSpec {
                    speed: 5.0,
                    t_max: 600.0,
                    soc0,
                    start: (0.0, 0.0),
                    waypoints: straight_line(n, 300.0, 0.0),
                }],
                vec![((0.0, 0.0), 1)],
            )
        };
        let s = base(0.5, 2);
        let ctx = SearchContext::new(&s).unwrap();
        assert!(ctx.finishable_without_replacement(&ctx.start_vertex(), 0));

        // Remaining 0.5 with 0.6 on board: 0.1 left is under the 0.2 floor.
        let s = base(0.6, 5);
        let ctx = SearchContext::new(&s).unwrap();
        assert!(!ctx.finishable_without_replacement(&ctx.start_vertex(), 0));

        // Exactly at the floor: inclusive.
        let s = base(0.4, 2);
        let ctx = SearchContext::new(&s).unwrap();
        assert!(ctx.finishable_without_replacement(&ctx.start_vertex(), 0));
    }

    #[test]
    fn expand_micro_instance_hand_enumerated() {
        // One UAV at 0.35 charge, two 0.1 legs, station co-located with the
        // first waypoint. Finishing needs 0.2 (would end at 0.15 < floor).
        // Swap at waypoint 0: reaches the station at 0.25, feasible. Swap at
        // waypoint 1: the 300 m station leg from there ends at 0.05,
        // infeasible. Expansion must produce exactly the one child.
        let s = scenario(
            vec![UavSpec {
                speed: 5.0,
                t_max: 600.0,
                soc0: 0.35,
                start: (0.0, 0.0),
                waypoints: straight_line(2, 300.0, 0.0),
            }],
            vec![((300.0, 0.0), 1)],
        );
        let ctx = SearchContext::new(&s).unwrap();
        let children = ctx.expand(&ctx.start_vertex());
        assert_eq!(children.len(), 1);
        let child = &children[0];
        assert_eq!(child.progress, vec![1]);
        assert_eq!(child.soc_now, vec![1.0]); // zero-length return leg
        assert_eq!(child.clock, vec![180.0]); // 60 s leg + 120 s swap
        assert_eq!(child.charged_counts, vec![0]);
        assert_eq!(child.committed.len(), 1);
        let a = &child.committed[0];
        assert_eq!((a.waypoint_index, a.depart_time, a.arrival_time, a.release_time),
                   (0, 60.0, 60.0, 180.0));
        assert_eq!(child.schedules[0].windows.len(), 1);
        assert!((child.g - 0.1).abs() < 1e-15);

        // From there the UAV can finish outright.
        let grandchildren = ctx.expand(child);
        assert_eq!(grandchildren.len(), 1);
        assert!(ctx.is_goal(&grandchildren[0]));
        assert!((grandchildren[0].g - 0.2).abs() < 1e-15);
    }

    #[test]
    fn exhausted_station_contributes_no_children() {
        let s = scenario(
            vec![UavSpec {
                speed: 5.0,
                t_max: 600.0,
                soc0: 0.35,
                start: (0.0, 0.0),
                waypoints: straight_line(2, 300.0, 0.0),
            }],
            vec![((300.0, 0.0), 0)], // no charged batteries
        );
        let ctx = SearchContext::new(&s).unwrap();
        assert!(ctx.expand(&ctx.start_vertex()).is_empty());
        assert!(matches!(plan(&s), Err(PlanError::Infeasible)));
        assert!(matches!(brute_force_plan(&s, 2), Err(PlanError::Infeasible)));
    }

    #[test]
    fn zero_action_plan_when_everyone_can_finish() {
        let s = scenario(
            vec![
                UavSpec {
                    speed: 5.0,
                    t_max: 600.0,
                    soc0: 1.0,
                    start: (0.0, 0.0),
                    waypoints: straight_line(3, 300.0, 0.0),
                },
                UavSpec {
                    speed: 5.0,
                    t_max: 600.0,
                    soc0: 0.9,
                    start: (0.0, 100.0),
                    waypoints: straight_line(3, 300.0, 100.0),
                },
            ],
            vec![((450.0, 50.0), 2)],
        );
        let (p, _) = plan(&s).unwrap();
        assert!(p.actions.is_empty());
        assert_eq!(p.total_soc_cost, 0.6); // 0.3 + 0.3
        assert_eq!(p.makespans[0].makespan_s, 180.0);
        let oracle = brute_force_plan(&s, 2).unwrap();
        assert_eq!(oracle.total_soc_cost, p.total_soc_cost);
    }

    #[test]
    fn micro_instance_matches_oracle_exactly() {
        // Both UAVs need one swap each at the single station, and their
        // cheapest windows collide, so one of them must shift.
        let s = two_uav_one_station();
        let (p, _) = plan(&s).unwrap();
        assert_eq!(p.actions.len(), 2);
        let oracle = brute_force_plan(&s, 3).unwrap();
        assert_eq!(p.total_soc_cost, oracle.total_soc_cost);
    }

    #[test]
    fn single_battery_for_two_needy_uavs_is_infeasible() {
        let mut s = two_uav_one_station();
        s.stations[0].batteries.truncate(1);
        assert!(matches!(plan(&s), Err(PlanError::Infeasible)));
        assert!(matches!(brute_force_plan(&s, 3), Err(PlanError::Infeasible)));
    }

    #[test]
    fn plan_is_deterministic() {
        let s = two_uav_one_station();
        let (p1, stats1) = plan(&s).unwrap();
        let (p2, stats2) = plan(&s).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(stats1.expanded, stats2.expanded);
        assert_eq!(stats1.generated, stats2.generated);
        assert_eq!(stats1.duplicates_skipped, stats2.duplicates_skipped);
    }

    #[test]
    fn replanning_from_partial_progress() {
        let mut s = two_uav_one_station();
        // First UAV already flew its first waypoint; its remaining charge
        // reflects that.
        s.missions[0].completed_count = 1;
        s.uavs[0].start_position = LocalPoint::new2(300.0, 0.0);
        s.uavs[0].initial_soc = Soc::new(0.37).unwrap();
        s.uavs[0].state = UavState::FlyingMission;
        let (p, _) = plan(&s).unwrap();
        for a in &p.actions {
            if a.uav_id == "1" {
                assert!(a.waypoint_index >= 1);
            }
        }
        let oracle = brute_force_plan(&s, 3).unwrap();
        assert_eq!(p.total_soc_cost, oracle.total_soc_cost);
    }

    #[test]
    fn timeout_zero_reports_timeout() {
        let mut s = two_uav_one_station();
        s.config.timeout = Some(0.0);
        assert!(matches!(plan(&s), Err(PlanError::Timeout(_))));
    }

    #[test]
    fn start_below_floor_is_infeasible() {
        let s = scenario(
            vec![UavSpec {
                speed: 5.0,
                t_max: 600.0,
                soc0: 0.15,
                start: (0.0, 0.0),
                waypoints: straight_line(2, 300.0, 0.0),
            }],
            vec![((300.0, 0.0), 1)],
        );
        assert!(matches!(plan(&s), Err(PlanError::Infeasible)));
        assert!(matches!(brute_force_plan(&s, 2), Err(PlanError::Infeasible)));
    }
}
