//! Problem-instance construction.
//!
//! A [`Scenario`] bundles the fleet, one mission per UAV, the swap stations,
//! and the planner configuration, with every coordinate already projected
//! into one shared local metric frame. Scenarios come from three sources:
//! the seeded random generator, a JSON scenario document, or imported
//! mission-plan files plus a parameter document.

pub mod qgc;

use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    Battery, LocalPoint, Mission, Soc, Station, StationState, Uav, UavState,
};
use qgc::{ParsedMissionPlan, QgcError};

/// Mean Earth radius, meters.
const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Planner knobs shared by scenario documents and the search itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Flight floor: UAVs may never be planned below this state of charge.
    #[serde(default = "default_min_soc")]
    pub min_soc: f64,
    /// Candidate swap actions whose one-way station leg exceeds this many
    /// seconds are pruned before search. `None` disables pruning.
    #[serde(default, rename = "detour_time_cap_s")]
    pub detour_time_cap: Option<f64>,
    /// Default swap duration, seconds, for stations that do not override it.
    #[serde(default = "default_replacement_duration", rename = "replacement_duration_s")]
    pub replacement_duration: f64,
    /// Station calendar margin blocked before a swap arrival, seconds.
    #[serde(default = "default_margin", rename = "safety_margin_before_s")]
    pub safety_margin_before: f64,
    /// Station calendar margin blocked after a swap completes, seconds.
    #[serde(default = "default_margin", rename = "safety_margin_after_s")]
    pub safety_margin_after: f64,
    /// Batteries at or above this charge count as swappable inventory.
    #[serde(default = "default_full_threshold")]
    pub full_threshold: f64,
    /// Wall-clock search budget, seconds. `None` means the built-in default.
    #[serde(default, rename = "timeout_s", skip_serializing_if = "Option::is_none")]
    pub timeout: Option<f64>,
}

fn default_min_soc() -> f64 {
    0.2
}

fn default_replacement_duration() -> f64 {
    120.0
}

fn default_margin() -> f64 {
    30.0
}

fn default_full_threshold() -> f64 {
    1.0 - 1e-9
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            min_soc: default_min_soc(),
            detour_time_cap: None,
            replacement_duration: default_replacement_duration(),
            safety_margin_before: default_margin(),
            safety_margin_after: default_margin(),
            full_threshold: default_full_threshold(),
            timeout: None,
        }
    }
}

impl PlannerConfig {
    fn validate(&self, problems: &mut Vec<String>) {
        if !(0.0..1.0).contains(&self.min_soc) {
            problems.push(format!("config.min_soc: {} outside [0, 1)", self.min_soc));
        }
        for (name, v) in [
            ("replacement_duration_s", self.replacement_duration),
            ("safety_margin_before_s", self.safety_margin_before),
            ("safety_margin_after_s", self.safety_margin_after),
        ] {
            if !v.is_finite() || v < 0.0 {
                problems.push(format!("config.{name}: {v} must be >= 0"));
            }
        }
        if let Some(cap) = self.detour_time_cap {
            if !cap.is_finite() || cap < 0.0 {
                problems.push(format!("config.detour_time_cap_s: {cap} must be >= 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.full_threshold) {
            problems.push(format!(
                "config.full_threshold: {} outside [0, 1]",
                self.full_threshold
            ));
        }
    }
}

/// A geodetic coordinate as read from mission files and scenario documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alt: Option<f64>,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64, alt: Option<f64>) -> Self {
        GeoPoint { lat, lon, alt }
    }

    fn check(&self) -> Result<(), ScenarioError> {
        if !self.lat.is_finite() || self.lat.abs() > 90.0 {
            return Err(ScenarioError::InvalidGeoPoint(format!(
                "latitude {} outside [-90, 90]",
                self.lat
            )));
        }
        if !self.lon.is_finite() || self.lon.abs() > 180.0 {
            return Err(ScenarioError::InvalidGeoPoint(format!(
                "longitude {} outside [-180, 180]",
                self.lon
            )));
        }
        Ok(())
    }
}

/// Project geodetic points onto the local tangent plane at `origin`.
///
/// `x` grows east, `y` grows north, both in meters; the origin maps to zero.
/// Points become 3-D (`z = alt - origin.alt`) only when the origin and every
/// point carry an altitude; otherwise altitudes are dropped.
pub fn to_local_frame(
    points: &[GeoPoint],
    origin: &GeoPoint,
) -> Result<Vec<LocalPoint>, ScenarioError> {
    origin.check()?;
    for p in points {
        p.check()?;
    }
    let deg = std::f64::consts::PI / 180.0 * EARTH_RADIUS_M;
    let cos_lat0 = origin.lat.to_radians().cos();
    let use_alt = origin.alt.is_some() && points.iter().all(|p| p.alt.is_some());
    Ok(points
        .iter()
        .map(|p| {
            let x = (p.lon - origin.lon) * cos_lat0 * deg;
            let y = (p.lat - origin.lat) * deg;
            if use_alt {
                LocalPoint::new3(x, y, p.alt.unwrap() - origin.alt.unwrap())
            } else {
                LocalPoint::new2(x, y)
            }
        })
        .collect())
}

/// An immutable problem instance. `missions[i]` belongs to `uavs[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub uavs: Vec<Uav>,
    pub missions: Vec<Mission>,
    pub stations: Vec<Station>,
    pub config: PlannerConfig,
}

impl Scenario {
    /// Validate every structural invariant, collecting all diagnostics.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut problems = Vec::new();

        if self.uavs.len() != self.missions.len() {
            problems.push(format!(
                "{} UAVs but {} missions; exactly one mission per UAV required",
                self.uavs.len(),
                self.missions.len()
            ));
        }

        let mut uav_ids = HashSet::new();
        for u in &self.uavs {
            if !uav_ids.insert(u.id.as_str()) {
                problems.push(format!("duplicate UAV id {:?}", u.id));
            }
            if !(u.speed.is_finite() && u.speed > 0.0) {
                problems.push(format!("uav {:?}: speed {} must be > 0", u.id, u.speed));
            }
            if !(u.max_flight_time.is_finite() && u.max_flight_time > 0.0) {
                problems.push(format!(
                    "uav {:?}: max_flight_time {} must be > 0",
                    u.id, u.max_flight_time
                ));
            }
        }

        let mut station_ids = HashSet::new();
        let mut battery_ids = HashSet::new();
        for s in &self.stations {
            if !station_ids.insert(s.id.as_str()) {
                problems.push(format!("duplicate station id {:?}", s.id));
            }
            if s.slots < 1 {
                problems.push(format!("station {:?}: slots must be >= 1", s.id));
            }
            if !(s.replacement_duration.is_finite() && s.replacement_duration >= 0.0) {
                problems.push(format!(
                    "station {:?}: replacement_duration {} must be >= 0",
                    s.id, s.replacement_duration
                ));
            }
            for b in &s.batteries {
                if !battery_ids.insert(b.id.as_str()) {
                    problems.push(format!("duplicate battery id {:?}", b.id));
                }
            }
        }

        for (i, m) in self.missions.iter().enumerate() {
            if m.is_empty() {
                problems.push(format!("mission for uav {:?}: no waypoints", m.uav_id));
            }
            if m.completed_count > m.len() {
                problems.push(format!(
                    "mission for uav {:?}: completed_count {} exceeds {} waypoints",
                    m.uav_id,
                    m.completed_count,
                    m.len()
                ));
            }
            if let Some(u) = self.uavs.get(i) {
                if u.id != m.uav_id {
                    problems.push(format!(
                        "mission {} is for uav {:?} but fleet slot {} holds uav {:?}",
                        i, m.uav_id, i, u.id
                    ));
                }
            }
        }

        let mut dims = HashSet::new();
        for u in &self.uavs {
            dims.insert(u.start_position.dim());
        }
        for m in &self.missions {
            for wp in &m.waypoints {
                dims.insert(wp.dim());
            }
        }
        for s in &self.stations {
            dims.insert(s.position.dim());
        }
        if dims.len() > 1 {
            problems.push(format!(
                "mixed point dimensionality across scenario: {:?}",
                {
                    let mut d: Vec<_> = dims.into_iter().collect();
                    d.sort_unstable();
                    d
                }
            ));
        } else if dims.iter().any(|&d| d != 2 && d != 3) {
            problems.push("points must be 2-D or 3-D".to_string());
        }

        self.config.validate(&mut problems);

        if problems.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Validation(problems))
        }
    }
}

/// Knobs for the random-instance generator. Every parameter is drawn from a
/// uniform distribution over its closed range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomScenarioParams {
    pub n_uavs: usize,
    pub n_stations: usize,
    pub batteries_per_station: usize,
    pub waypoints_per_mission: usize,
    /// UAV speed range, m/s.
    pub speed_range: (f64, f64),
    /// Full-charge endurance range, seconds.
    pub flight_time_range: (f64, f64),
    pub initial_soc_range: (f64, f64),
    /// Mission centers and stations are placed uniformly over this field, m.
    pub field_size: (f64, f64),
    /// Mission ellipse semi-axis range, meters.
    pub semi_axis_range: (f64, f64),
    pub config: PlannerConfig,
}

impl Default for RandomScenarioParams {
    fn default() -> Self {
        RandomScenarioParams {
            n_uavs: 6,
            n_stations: 5,
            batteries_per_station: 10,
            waypoints_per_mission: 50,
            speed_range: (2.0, 6.0),
            flight_time_range: (600.0, 1200.0),
            initial_soc_range: (0.6, 1.0),
            field_size: (1000.0, 1000.0),
            semi_axis_range: (100.0, 300.0),
            config: PlannerConfig::default(),
        }
    }
}

impl RandomScenarioParams {
    fn validate(&self) -> Result<(), ScenarioError> {
        let mut problems = Vec::new();
        if self.n_uavs == 0 {
            problems.push("n_uavs must be >= 1".to_string());
        }
        if self.n_stations == 0 {
            problems.push("n_stations must be >= 1".to_string());
        }
        if self.waypoints_per_mission == 0 {
            problems.push("waypoints_per_mission must be >= 1".to_string());
        }
        for (name, (lo, hi)) in [
            ("speed_range", self.speed_range),
            ("flight_time_range", self.flight_time_range),
            ("initial_soc_range", self.initial_soc_range),
            ("semi_axis_range", self.semi_axis_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                problems.push(format!("{name}: ({lo}, {hi}) must satisfy lo <= hi"));
            }
            if lo <= 0.0 && name != "initial_soc_range" {
                problems.push(format!("{name}: lower bound {lo} must be > 0"));
            }
        }
        if self.initial_soc_range.0 < 0.0 || self.initial_soc_range.1 > 1.0 {
            problems.push("initial_soc_range must lie within [0, 1]".to_string());
        }
        if self.field_size.0 <= 0.0 || self.field_size.1 <= 0.0 {
            problems.push("field_size must be positive".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::InvalidParams(problems.join("; ")))
        }
    }
}

/// Place `count` points on the boundary of an axis-aligned ellipse, at angles
/// drawn uniformly from `[0, 2π)` and sorted ascending. Deterministic for a
/// given generator state.
pub fn ellipse_waypoints(
    center: &LocalPoint,
    semi_axes: (f64, f64),
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<LocalPoint>, ScenarioError> {
    let (a, b) = semi_axes;
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(ScenarioError::InvalidAxes(a, b));
    }
    if count == 0 {
        return Err(ScenarioError::InvalidParams(
            "ellipse waypoint count must be >= 1".to_string(),
        ));
    }
    let mut angles: Vec<f64> = (0..count)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles
        .into_iter()
        .map(|t| ellipse_point(center, (a, b), t))
        .collect())
}

fn ellipse_point(center: &LocalPoint, (a, b): (f64, f64), theta: f64) -> LocalPoint {
    LocalPoint::new2(center.x() + a * theta.cos(), center.y() + b * theta.sin())
}

/// Generate a randomized instance: `n_uavs` UAVs, each flying a sorted-angle
/// ellipse mission started from the ellipse center, and `n_stations` stations
/// stocked with full batteries, all placed uniformly over the field.
/// Identical seeds produce identical scenarios.
pub fn generate_random_scenario(
    seed: u64,
    params: &RandomScenarioParams,
) -> Result<Scenario, ScenarioError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (fx, fy) = params.field_size;

    let mut uavs = Vec::with_capacity(params.n_uavs);
    let mut missions = Vec::with_capacity(params.n_uavs);
    for i in 0..params.n_uavs {
        let id = format!("{}", i + 1);
        let speed = range_sample(&mut rng, params.speed_range);
        let max_flight_time = range_sample(&mut rng, params.flight_time_range);
        let initial_soc = range_sample(&mut rng, params.initial_soc_range);
        let center = LocalPoint::new2(rng.random_range(0.0..fx), rng.random_range(0.0..fy));
        let semi_a = range_sample(&mut rng, params.semi_axis_range);
        let semi_b = range_sample(&mut rng, params.semi_axis_range);
        let waypoints = ellipse_waypoints(
            &center,
            (semi_a, semi_b),
            params.waypoints_per_mission,
            &mut rng,
        )?;
        uavs.push(Uav {
            id: id.clone(),
            speed,
            max_flight_time,
            initial_soc: Soc::new(initial_soc).expect("sampled within [0, 1]"),
            start_position: center,
            state: UavState::TakingOff,
        });
        missions.push(Mission {
            uav_id: id,
            waypoints,
            completed_count: 0,
        });
    }

    let mut stations = Vec::with_capacity(params.n_stations);
    for i in 0..params.n_stations {
        let id = format!("{}", 201 + i);
        let position = LocalPoint::new2(rng.random_range(0.0..fx), rng.random_range(0.0..fy));
        let batteries = (0..params.batteries_per_station)
            .map(|k| Battery {
                id: format!("{id}-b{}", k + 1),
                soc: Soc::FULL,
            })
            .collect();
        stations.push(Station {
            id,
            position,
            slots: 1,
            batteries,
            replacement_duration: params.config.replacement_duration,
            state: StationState::Idle,
        });
    }

    let scenario = Scenario {
        uavs,
        missions,
        stations,
        config: params.config.clone(),
    };
    scenario.validate()?;
    Ok(scenario)
}

fn range_sample(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

// ---------------------------------------------------------------------------
// Scenario documents
// ---------------------------------------------------------------------------

/// A point in a document: either local `[x, y(, z)]` meters or a geodetic
/// object projected through the document origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Local(Vec<f64>),
    Geo(GeoPoint),
}

/// Mission source in a document: inline waypoints or a mission-plan file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MissionSpec {
    Inline { waypoints: Vec<PointSpec> },
    PlanFile { plan_file: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavDoc {
    pub id: String,
    pub speed_mps: f64,
    pub max_flight_time_s: f64,
    pub initial_soc: f64,
    pub start: PointSpec,
    pub mission: MissionSpec,
    #[serde(default)]
    pub completed_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryDoc {
    pub id: String,
    pub soc: f64,
}

/// Battery inventory in a document: a shorthand count of full batteries or an
/// explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatteriesSpec {
    Count(usize),
    List(Vec<BatteryDoc>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationDoc {
    pub id: String,
    pub position: PointSpec,
    #[serde(default = "default_slots")]
    pub slots: usize,
    pub batteries: BatteriesSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement_duration_s: Option<f64>,
}

fn default_slots() -> usize {
    1
}

/// The on-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<GeoPoint>,
    pub uavs: Vec<UavDoc>,
    pub stations: Vec<StationDoc>,
    #[serde(default)]
    pub config: PlannerConfig,
}

impl ScenarioDocument {
    /// Resolve the document into a validated [`Scenario`]. `base_dir` anchors
    /// relative mission-plan file paths.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Scenario, ScenarioError> {
        let mut problems = Vec::new();
        let mut uavs = Vec::with_capacity(self.uavs.len());
        let mut missions = Vec::with_capacity(self.uavs.len());

        for u in &self.uavs {
            let start = self.resolve_point(&u.start, &mut problems, &format!("uav {:?} start", u.id));
            let waypoints = match &u.mission {
                MissionSpec::Inline { waypoints } => waypoints
                    .iter()
                    .enumerate()
                    .filter_map(|(k, p)| {
                        self.resolve_point(p, &mut problems, &format!("uav {:?} waypoint {k}", u.id))
                    })
                    .collect::<Vec<_>>(),
                MissionSpec::PlanFile { plan_file } => {
                    let path = match base_dir {
                        Some(dir) => dir.join(plan_file),
                        None => plan_file.into(),
                    };
                    match load_plan_waypoints(&path, self.origin.as_ref()) {
                        Ok(points) => points,
                        Err(e) => {
                            problems.push(format!("uav {:?} mission: {e}", u.id));
                            Vec::new()
                        }
                    }
                }
            };
            let initial_soc = match Soc::new(u.initial_soc) {
                Ok(s) => s,
                Err(e) => {
                    problems.push(format!("uav {:?}: {e}", u.id));
                    Soc::FULL
                }
            };
            let state = if u.completed_count == 0 {
                UavState::TakingOff
            } else {
                UavState::FlyingMission
            };
            uavs.push(Uav {
                id: u.id.clone(),
                speed: u.speed_mps,
                max_flight_time: u.max_flight_time_s,
                initial_soc,
                start_position: start.unwrap_or_else(|| LocalPoint::new2(0.0, 0.0)),
                state,
            });
            missions.push(Mission {
                uav_id: u.id.clone(),
                waypoints,
                completed_count: u.completed_count,
            });
        }

        let mut stations = Vec::with_capacity(self.stations.len());
        for s in &self.stations {
            let position = self
                .resolve_point(&s.position, &mut problems, &format!("station {:?}", s.id))
                .unwrap_or_else(|| LocalPoint::new2(0.0, 0.0));
            let batteries = match &s.batteries {
                BatteriesSpec::Count(n) => (0..*n)
                    .map(|k| Battery {
                        id: format!("{}-b{}", s.id, k + 1),
                        soc: Soc::FULL,
                    })
                    .collect(),
                BatteriesSpec::List(list) => list
                    .iter()
                    .map(|b| {
                        let soc = Soc::new(b.soc).unwrap_or_else(|e| {
                            problems.push(format!("station {:?} battery {:?}: {e}", s.id, b.id));
                            Soc::FULL
                        });
                        Battery {
                            id: b.id.clone(),
                            soc,
                        }
                    })
                    .collect(),
            };
            stations.push(Station {
                id: s.id.clone(),
                position,
                slots: s.slots,
                batteries,
                replacement_duration: s
                    .replacement_duration_s
                    .unwrap_or(self.config.replacement_duration),
                state: StationState::Idle,
            });
        }

        if !problems.is_empty() {
            return Err(ScenarioError::Validation(problems));
        }
        let scenario = Scenario {
            uavs,
            missions,
            stations,
            config: self.config.clone(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn resolve_point(
        &self,
        spec: &PointSpec,
        problems: &mut Vec<String>,
        what: &str,
    ) -> Option<LocalPoint> {
        match spec {
            PointSpec::Local(coords) => {
                if coords.len() == 2 || coords.len() == 3 {
                    Some(LocalPoint {
                        coords: coords.clone(),
                    })
                } else {
                    problems.push(format!("{what}: local point needs 2 or 3 coordinates"));
                    None
                }
            }
            PointSpec::Geo(geo) => match &self.origin {
                Some(origin) => match to_local_frame(std::slice::from_ref(geo), origin) {
                    Ok(mut pts) => Some(pts.remove(0)),
                    Err(e) => {
                        problems.push(format!("{what}: {e}"));
                        None
                    }
                },
                None => {
                    problems.push(format!(
                        "{what}: geodetic point given but the document has no origin"
                    ));
                    None
                }
            },
        }
    }
}

fn load_plan_waypoints(
    path: &Path,
    origin: Option<&GeoPoint>,
) -> Result<Vec<LocalPoint>, ScenarioError> {
    let origin = origin.ok_or_else(|| {
        ScenarioError::Validation(vec![
            "mission-plan files require a document origin for projection".to_string(),
        ])
    })?;
    let contents = std::fs::read_to_string(path)?;
    let parsed = qgc::parse_mission_plan(&contents).map_err(|source| ScenarioError::PlanFile {
        path: path.display().to_string(),
        source,
    })?;
    // Mission files carry altitudes relative to their own home; planning uses
    // horizontal legs, so imported missions are flattened to 2-D.
    let flat: Vec<GeoPoint> = parsed
        .waypoints
        .iter()
        .map(|p| GeoPoint::new(p.lat, p.lon, None))
        .collect();
    let origin2 = GeoPoint::new(origin.lat, origin.lon, None);
    to_local_frame(&flat, &origin2)
}

/// Parse a scenario document from JSON text. Relative mission-plan paths are
/// resolved against `base_dir` when given, the process directory otherwise.
pub fn parse_scenario_str(
    contents: &str,
    base_dir: Option<&Path>,
) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDocument = serde_json::from_str(contents)?;
    doc.resolve(base_dir)
}

/// Load and resolve a scenario document from disk.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let contents = std::fs::read_to_string(path)?;
    parse_scenario_str(&contents, path.parent())
}

/// Render a scenario back into an equivalent all-local document.
pub fn scenario_to_document(scenario: &Scenario) -> ScenarioDocument {
    ScenarioDocument {
        origin: None,
        uavs: scenario
            .uavs
            .iter()
            .zip(&scenario.missions)
            .map(|(u, m)| UavDoc {
                id: u.id.clone(),
                speed_mps: u.speed,
                max_flight_time_s: u.max_flight_time,
                initial_soc: u.initial_soc.value(),
                start: PointSpec::Local(u.start_position.coords.clone()),
                mission: MissionSpec::Inline {
                    waypoints: m
                        .waypoints
                        .iter()
                        .map(|p| PointSpec::Local(p.coords.clone()))
                        .collect(),
                },
                completed_count: m.completed_count,
            })
            .collect(),
        stations: scenario
            .stations
            .iter()
            .map(|s| StationDoc {
                id: s.id.clone(),
                position: PointSpec::Local(s.position.coords.clone()),
                slots: s.slots,
                batteries: BatteriesSpec::List(
                    s.batteries
                        .iter()
                        .map(|b| BatteryDoc {
                            id: b.id.clone(),
                            soc: b.soc.value(),
                        })
                        .collect(),
                ),
                replacement_duration_s: Some(s.replacement_duration),
            })
            .collect(),
        config: scenario.config.clone(),
    }
}

/// Serialize a scenario as a pretty-printed document.
pub fn scenario_to_json(scenario: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(&scenario_to_document(scenario))
        .expect("scenario documents always serialize");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Mission-plan import
// ---------------------------------------------------------------------------

/// Per-UAV parameters used when importing mission-plan files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImportUavParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_mps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_flight_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_soc: Option<f64>,
    #[serde(default)]
    pub completed_count: usize,
}

/// Parameter document accompanying imported mission-plan files: fleet-wide
/// UAV defaults, optional per-file overrides (matched by file order), the
/// stations, and the planner configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportParams {
    #[serde(default)]
    pub uav_defaults: ImportUavParams,
    #[serde(default)]
    pub uavs: Vec<ImportUavParams>,
    pub stations: Vec<StationDoc>,
    #[serde(default)]
    pub config: PlannerConfig,
}

/// Build a scenario from parsed mission plans. The local frame is anchored at
/// the first plan's home position; each UAV starts at its own home. `names`
/// label the plans (typically file stems) and become UAV ids unless the
/// params override them.
pub fn import_mission_plans(
    plans: &[(String, ParsedMissionPlan)],
    params: &ImportParams,
) -> Result<Scenario, ScenarioError> {
    if plans.is_empty() {
        return Err(ScenarioError::Validation(vec![
            "at least one mission-plan file is required".to_string(),
        ]));
    }
    let origin = GeoPoint::new(plans[0].1.home.lat, plans[0].1.home.lon, None);

    let mut problems = Vec::new();
    let mut uavs = Vec::with_capacity(plans.len());
    let mut missions = Vec::with_capacity(plans.len());
    for (i, (name, plan)) in plans.iter().enumerate() {
        let over = params.uavs.get(i);
        let mut pick_f64 = |get: fn(&ImportUavParams) -> Option<f64>, what: &str| -> f64 {
            over.and_then(get).or(get(&params.uav_defaults)).unwrap_or_else(|| {
                problems.push(format!("mission {name:?}: missing UAV parameter {what}"));
                f64::NAN
            })
        };
        let speed = pick_f64(|p| p.speed_mps, "speed_mps");
        let max_flight_time = pick_f64(|p| p.max_flight_time_s, "max_flight_time_s");
        let initial_soc_raw = over
            .and_then(|p| p.initial_soc)
            .or(params.uav_defaults.initial_soc)
            .unwrap_or(1.0);
        let id = over
            .and_then(|p| p.id.clone())
            .unwrap_or_else(|| name.clone());
        let completed_count = over.map(|p| p.completed_count).unwrap_or(0);

        let flat: Vec<GeoPoint> = plan
            .waypoints
            .iter()
            .map(|p| GeoPoint::new(p.lat, p.lon, None))
            .collect();
        let waypoints = to_local_frame(&flat, &origin)?;
        let home_local = to_local_frame(
            &[GeoPoint::new(plan.home.lat, plan.home.lon, None)],
            &origin,
        )?
        .remove(0);

        let initial_soc = Soc::new(initial_soc_raw).unwrap_or_else(|e| {
            problems.push(format!("mission {name:?}: {e}"));
            Soc::FULL
        });
        uavs.push(Uav {
            id: id.clone(),
            speed,
            max_flight_time,
            initial_soc,
            start_position: home_local,
            state: if completed_count == 0 {
                UavState::TakingOff
            } else {
                UavState::FlyingMission
            },
        });
        missions.push(Mission {
            uav_id: id,
            waypoints,
            completed_count,
        });
    }

    let shell = ScenarioDocument {
        origin: Some(origin),
        uavs: Vec::new(),
        stations: params.stations.clone(),
        config: params.config.clone(),
    };
    let resolved_stations = shell.resolve(None)?;
    if !problems.is_empty() {
        return Err(ScenarioError::Validation(problems));
    }

    let scenario = Scenario {
        uavs,
        missions,
        stations: resolved_stations.stations,
        config: params.config.clone(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Errors from scenario construction, parsing, and validation.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("invalid geodetic point: {0}")]
    InvalidGeoPoint(String),
    #[error("invalid ellipse semi-axes ({0}, {1})")]
    InvalidAxes(f64, f64),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    PlanFile { path: String, source: QgcError },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_projects_to_zero() {
        let origin = GeoPoint::new(49.75, 13.38, Some(320.0));
        let pts = to_local_frame(&[origin], &origin).unwrap();
        assert_eq!(pts[0], LocalPoint::new3(0.0, 0.0, 0.0));
    }

    #[test]
    fn equator_longitude_step() {
        let origin = GeoPoint::new(0.0, 0.0, None);
        let p = GeoPoint::new(0.0, 0.001, None);
        let local = to_local_frame(&[p], &origin).unwrap();
        // Independently: R * pi/180 * 0.001 = 111.19 m.
        let expect = EARTH_RADIUS_M * std::f64::consts::PI / 180.0 * 0.001;
        assert!((local[0].x() - expect).abs() < 0.01);
        assert!((local[0].x() - 111.19).abs() < 0.01);
        assert_eq!(local[0].y(), 0.0);
    }

    #[test]
    fn symmetric_points_negate() {
        let origin = GeoPoint::new(49.75, 13.38, None);
        let a = GeoPoint::new(49.7523, 13.3841, None);
        let b = GeoPoint::new(49.7477, 13.3759, None);
        let local = to_local_frame(&[a, b], &origin).unwrap();
        assert!((local[0].x() + local[1].x()).abs() < 1e-6);
        assert!((local[0].y() + local[1].y()).abs() < 1e-6);
    }

    #[test]
    fn invalid_latitude_rejected() {
        let origin = GeoPoint::new(91.0, 0.0, None);
        let r = to_local_frame(&[GeoPoint::new(0.0, 0.0, None)], &origin);
        assert!(matches!(r, Err(ScenarioError::InvalidGeoPoint(_))));
    }

    // Inverse of the tangent-plane map, test-only.
    fn local_to_geo(p: &LocalPoint, origin: &GeoPoint) -> GeoPoint {
        let deg = std::f64::consts::PI / 180.0 * EARTH_RADIUS_M;
        let cos_lat0 = origin.lat.to_radians().cos();
        GeoPoint::new(
            origin.lat + p.y() / deg,
            origin.lon + p.x() / (deg * cos_lat0),
            None,
        )
    }

    #[test]
    fn projection_round_trip_within_centimeter() {
        use rand::{Rng, SeedableRng};
        let origin = GeoPoint::new(49.75, 13.38, None);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let local = LocalPoint::new2(
                rng.random_range(-5000.0..5000.0),
                rng.random_range(-5000.0..5000.0),
            );
            let geo = local_to_geo(&local, &origin);
            let back = to_local_frame(&[geo], &origin).unwrap();
            assert!((back[0].x() - local.x()).abs() < 0.01);
            assert!((back[0].y() - local.y()).abs() < 0.01);
        }
    }

    #[test]
    fn ellipse_circle_special_case() {
        // At the four cardinal angles a circle of radius r yields offsets
        // (±r, 0) and (0, ±r) from the center.
        let center = LocalPoint::new2(10.0, -5.0);
        let angles = [
            0.0,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::PI,
            3.0 * std::f64::consts::FRAC_PI_2,
        ];
        let expect = [(50.0, 0.0), (0.0, 50.0), (-50.0, 0.0), (0.0, -50.0)];
        for (theta, want) in angles.iter().zip(expect) {
            let p = ellipse_point(&center, (50.0, 50.0), *theta);
            assert!((p.x() - center.x() - want.0).abs() < 1e-6);
            assert!((p.y() - center.y() - want.1).abs() < 1e-6);
        }
    }

    #[test]
    fn ellipse_points_on_curve() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let center = LocalPoint::new2(500.0, 400.0);
        let (a, b) = (220.0, 140.0);
        let pts = ellipse_waypoints(&center, (a, b), 50, &mut rng).unwrap();
        for p in &pts {
            let u = (p.x() - center.x()) / a;
            let v = (p.y() - center.y()) / b;
            assert!((u * u + v * v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ellipse_deterministic_under_seed() {
        use rand::SeedableRng;
        let center = LocalPoint::new2(0.0, 0.0);
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        let mut r2 = ChaCha8Rng::seed_from_u64(42);
        let a = ellipse_waypoints(&center, (100.0, 80.0), 20, &mut r1).unwrap();
        let b = ellipse_waypoints(&center, (100.0, 80.0), 20, &mut r2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ellipse_rejects_bad_axes() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let center = LocalPoint::new2(0.0, 0.0);
        assert!(matches!(
            ellipse_waypoints(&center, (0.0, 10.0), 4, &mut rng),
            Err(ScenarioError::InvalidAxes(..))
        ));
        assert!(matches!(
            ellipse_waypoints(&center, (10.0, -1.0), 4, &mut rng),
            Err(ScenarioError::InvalidAxes(..))
        ));
    }

    #[test]
    fn random_scenario_defaults_match_expected_shape() {
        let s = generate_random_scenario(0, &RandomScenarioParams::default()).unwrap();
        assert_eq!(s.uavs.len(), 6);
        assert_eq!(s.stations.len(), 5);
        assert_eq!(s.missions.len(), 6);
        for st in &s.stations {
            assert_eq!(st.batteries.len(), 10);
        }
        for m in &s.missions {
            assert_eq!(m.len(), 50);
        }
    }

    #[test]
    fn random_scenario_parameter_ranges_hold() {
        for seed in 0..10u64 {
            let s = generate_random_scenario(seed, &RandomScenarioParams::default()).unwrap();
            for u in &s.uavs {
                assert!((2.0..=6.0).contains(&u.speed));
                assert!((600.0..=1200.0).contains(&u.max_flight_time));
                assert!((0.6..=1.0).contains(&u.initial_soc.value()));
            }
        }
    }

    #[test]
    fn random_scenario_deterministic() {
        let a = generate_random_scenario(11, &RandomScenarioParams::default()).unwrap();
        let b = generate_random_scenario(11, &RandomScenarioParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_scenario_minimal_boundary() {
        let params = RandomScenarioParams {
            n_uavs: 1,
            n_stations: 1,
            waypoints_per_mission: 2,
            ..RandomScenarioParams::default()
        };
        let s = generate_random_scenario(0, &params).unwrap();
        assert_eq!(s.uavs.len(), 1);
        assert_eq!(s.stations.len(), 1);
        assert_eq!(s.missions[0].len(), 2);
        s.validate().unwrap();
    }

    #[test]
    fn random_scenario_rejects_zero_uavs() {
        let params = RandomScenarioParams {
            n_uavs: 0,
            ..RandomScenarioParams::default()
        };
        assert!(matches!(
            generate_random_scenario(0, &params),
            Err(ScenarioError::InvalidParams(_))
        ));
    }

    #[test]
    fn document_round_trip_is_identity() {
        let s = generate_random_scenario(4, &RandomScenarioParams::default()).unwrap();
        let json = scenario_to_json(&s);
        let restored = parse_scenario_str(&json, None).unwrap();
        assert_eq!(s, restored);
    }

    #[test]
    fn duplicate_uav_id_rejected() {
        let mut s = generate_random_scenario(0, &RandomScenarioParams::default()).unwrap();
        s.uavs[1].id = s.uavs[0].id.clone();
        s.missions[1].uav_id = s.missions[0].uav_id.clone();
        let json = scenario_to_json(&s);
        match parse_scenario_str(&json, None) {
            Err(ScenarioError::Validation(problems)) => {
                assert!(problems.iter().any(|p| p.contains("duplicate UAV id")));
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn mixed_dimensionality_rejected() {
        let mut s = generate_random_scenario(0, &RandomScenarioParams::default()).unwrap();
        s.missions[0].waypoints[0] = LocalPoint::new3(0.0, 0.0, 10.0);
        let json = scenario_to_json(&s);
        match parse_scenario_str(&json, None) {
            Err(ScenarioError::Validation(problems)) => {
                assert!(problems.iter().any(|p| p.contains("dimensionality")));
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }
}
