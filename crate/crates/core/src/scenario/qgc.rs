//! Read-only parser for QGroundControl `.plan` mission files.
//!
//! Only the subset needed for ingestion is read: the planned home position
//! and the coordinates of simple navigation items. Geofences, rally points,
//! complex survey items, and non-spatial commands are skipped.

use serde_json::Value;

use super::GeoPoint;

/// MAVLink commands whose mission items carry a target coordinate in
/// params 5..7 (lat, lon, alt).
const NAV_COMMANDS: &[u64] = &[
    16, // NAV_WAYPOINT
    17, // NAV_LOITER_UNLIM
    18, // NAV_LOITER_TURNS
    19, // NAV_LOITER_TIME
    21, // NAV_LAND
    22, // NAV_TAKEOFF
    31, // NAV_LOITER_TO_ALT
    82, // NAV_SPLINE_WAYPOINT
    84, // NAV_VTOL_TAKEOFF
    85, // NAV_VTOL_LAND
];

/// Waypoints and home position extracted from one `.plan` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMissionPlan {
    /// Ordered coordinates of the navigation items.
    pub waypoints: Vec<GeoPoint>,
    /// The file's planned home position.
    pub home: GeoPoint,
}

/// Errors from `.plan` ingestion.
#[derive(Debug, thiserror::Error)]
pub enum QgcError {
    #[error("malformed plan file: {0}")]
    ParseError(String),
    #[error("unsupported plan file version: {0}")]
    UnsupportedVersion(String),
    #[error("plan file contains no coordinate-carrying mission items")]
    NoWaypoints,
}

/// Parse a QGroundControl `.plan` document.
///
/// Returns the ordered coordinates of mission items that carry one
/// (navigation commands), skipping non-spatial items, plus the planned home
/// position.
pub fn parse_mission_plan(contents: &str) -> Result<ParsedMissionPlan, QgcError> {
    let root: Value = serde_json::from_str(contents)
        .map_err(|e| QgcError::ParseError(format!("not valid JSON: {e}")))?;
    let root = root
        .as_object()
        .ok_or_else(|| QgcError::ParseError("top level is not an object".to_string()))?;

    if let Some(file_type) = root.get("fileType") {
        if file_type.as_str() != Some("Plan") {
            return Err(QgcError::ParseError(format!(
                "fileType is {file_type}, expected \"Plan\""
            )));
        }
    }
    if let Some(version) = root.get("version").and_then(Value::as_u64) {
        if version != 1 {
            return Err(QgcError::UnsupportedVersion(format!("file version {version}")));
        }
    }

    let mission = root
        .get("mission")
        .and_then(Value::as_object)
        .ok_or_else(|| QgcError::ParseError("missing \"mission\" object".to_string()))?;
    if let Some(version) = mission.get("version").and_then(Value::as_u64) {
        if version != 2 {
            return Err(QgcError::UnsupportedVersion(format!(
                "mission version {version}"
            )));
        }
    }

    let home = mission
        .get("plannedHomePosition")
        .and_then(Value::as_array)
        .ok_or_else(|| QgcError::ParseError("missing \"plannedHomePosition\"".to_string()))?;
    let home = GeoPoint::new(
        coord(home.first()).ok_or_else(|| bad_home())?,
        coord(home.get(1)).ok_or_else(|| bad_home())?,
        coord(home.get(2)),
    );

    let items = mission
        .get("items")
        .and_then(Value::as_array)
        .ok_or_else(|| QgcError::ParseError("missing \"mission.items\" array".to_string()))?;

    let mut waypoints = Vec::new();
    for item in items {
        let Some(item) = item.as_object() else {
            continue;
        };
        if let Some(kind) = item.get("type").and_then(Value::as_str) {
            if kind != "SimpleItem" {
                continue;
            }
        }
        let Some(command) = item.get("command").and_then(Value::as_u64) else {
            continue;
        };
        if !NAV_COMMANDS.contains(&command) {
            continue;
        }
        let Some(params) = item.get("params").and_then(Value::as_array) else {
            continue;
        };
        let (Some(lat), Some(lon)) = (coord(params.get(4)), coord(params.get(5))) else {
            // Nav command without a concrete coordinate (e.g. takeoff at the
            // current position) — nothing to fly to.
            continue;
        };
        waypoints.push(GeoPoint::new(lat, lon, coord(params.get(6))));
    }

    if waypoints.is_empty() {
        return Err(QgcError::NoWaypoints);
    }
    Ok(ParsedMissionPlan { waypoints, home })
}

fn coord(v: Option<&Value>) -> Option<f64> {
    v.and_then(Value::as_f64).filter(|x| x.is_finite())
}

fn bad_home() -> QgcError {
    QgcError::ParseError("plannedHomePosition must hold [lat, lon, alt]".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_plan(items: &str) -> String {
        format!(
            r#"{{
              "fileType": "Plan",
              "groundStation": "QGroundControl",
              "version": 1,
              "geoFence": {{"circles": [], "polygons": [], "version": 2}},
              "rallyPoints": {{"points": [], "version": 2}},
              "mission": {{
                "version": 2,
                "firmwareType": 12,
                "vehicleType": 2,
                "cruiseSpeed": 15,
                "hoverSpeed": 5,
                "plannedHomePosition": [49.75, 13.38, 320.5],
                "items": [{items}]
              }}
            }}"#
        )
    }

    fn waypoint_item(lat: f64, lon: f64, alt: f64) -> String {
        format!(
            r#"{{
              "type": "SimpleItem", "command": 16, "frame": 3,
              "autoContinue": true, "doJumpId": 1,
              "params": [0, 0, 0, null, {lat}, {lon}, {alt}]
            }}"#
        )
    }

    #[test]
    fn two_waypoints_in_file_order() {
        let doc = minimal_plan(&format!(
            "{},{}",
            waypoint_item(49.7501, 13.3801, 30.0),
            waypoint_item(49.7502, 13.3802, 30.0)
        ));
        let parsed = parse_mission_plan(&doc).unwrap();
        assert_eq!(parsed.waypoints.len(), 2);
        assert_eq!(parsed.waypoints[0].lat, 49.7501);
        assert_eq!(parsed.waypoints[1].lat, 49.7502);
        assert_eq!(parsed.home.lat, 49.75);
        assert_eq!(parsed.home.alt, Some(320.5));
    }

    #[test]
    fn non_spatial_item_skipped_order_preserved() {
        // A change-speed command (178) sits between two waypoints.
        let speed_change = r#"{
          "type": "SimpleItem", "command": 178, "frame": 2,
          "autoContinue": true, "doJumpId": 2,
          "params": [1, 5, -1, 0, null, null, null]
        }"#;
        let doc = minimal_plan(&format!(
            "{},{},{}",
            waypoint_item(49.7501, 13.3801, 30.0),
            speed_change,
            waypoint_item(49.7502, 13.3802, 30.0)
        ));
        let parsed = parse_mission_plan(&doc).unwrap();
        assert_eq!(parsed.waypoints.len(), 2);
        assert!(parsed.waypoints[0].lat < parsed.waypoints[1].lat);
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(
            parse_mission_plan("{ not json"),
            Err(QgcError::ParseError(_))
        ));
    }

    #[test]
    fn wrong_file_type_rejected() {
        let doc = minimal_plan(&waypoint_item(49.75, 13.38, 30.0))
            .replace("\"Plan\"", "\"Telemetry\"");
        assert!(matches!(
            parse_mission_plan(&doc),
            Err(QgcError::ParseError(_))
        ));
    }

    #[test]
    fn future_version_rejected() {
        let doc =
            minimal_plan(&waypoint_item(49.75, 13.38, 30.0)).replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(
            parse_mission_plan(&doc),
            Err(QgcError::UnsupportedVersion(_))
        ));
    }

    #[test]
    fn no_waypoints_detected() {
        let doc = minimal_plan("");
        assert!(matches!(parse_mission_plan(&doc), Err(QgcError::NoWaypoints)));
    }
}
