//! Per-station reservation calendars.
//!
//! Windows are half-open `[start, end)`: two windows conflict only when their
//! intersection has positive length, so back-to-back reservations that share
//! a boundary instant are legal. Schedules are persistent values — reserving
//! returns a new schedule and never mutates the original, which lets search
//! branches hold divergent calendars cheaply.

use serde::{Deserialize, Serialize};

use crate::scenario::PlannerConfig;

/// A half-open time interval `[start, end)`, seconds since scenario start.
/// A degenerate window with `start == end` conflicts with nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        debug_assert!(start <= end, "window start after end: [{start}, {end})");
        Window { start, end }
    }

    /// True when the two windows share an interval of positive length.
    pub fn conflicts(&self, other: &Window) -> bool {
        self.end.min(other.end) > self.start.max(other.start)
    }
}

/// Reservation conflict raised when a window is not free.
#[derive(Debug, thiserror::Error)]
#[error("station {station_id}: window [{start}, {end}) conflicts with an existing reservation")]
pub struct Conflict {
    pub station_id: String,
    pub start: f64,
    pub end: f64,
}

/// The reservation calendar of one station, windows sorted by start time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSchedule {
    pub station_id: String,
    pub windows: Vec<Window>,
}

impl StationSchedule {
    pub fn new(station_id: impl Into<String>) -> Self {
        StationSchedule {
            station_id: station_id.into(),
            windows: Vec::new(),
        }
    }

    /// True iff `candidate` overlaps no reserved window.
    pub fn is_free(&self, candidate: &Window) -> bool {
        self.windows.iter().all(|w| !w.conflicts(candidate))
    }

    /// Return a copy of the schedule with `candidate` reserved, keeping
    /// windows sorted by start. The receiver is left untouched.
    pub fn reserve(&self, candidate: Window) -> Result<StationSchedule, Conflict> {
        if !self.is_free(&candidate) {
            return Err(Conflict {
                station_id: self.station_id.clone(),
                start: candidate.start,
                end: candidate.end,
            });
        }
        let mut next = self.clone();
        let at = next
            .windows
            .partition_point(|w| (w.start, w.end) < (candidate.start, candidate.end));
        next.windows.insert(at, candidate);
        Ok(next)
    }
}

/// The station calendar window blocked by a swap whose UAV arrives at
/// `arrival`: the replacement itself plus safety margins on both sides.
/// A margin that would protrude before time zero is clamped away.
pub fn blocking_window(arrival: f64, config: &PlannerConfig) -> Window {
    blocking_window_with_duration(arrival, config.replacement_duration, config)
}

/// Same as [`blocking_window`] but for a station-specific swap duration.
pub fn blocking_window_with_duration(
    arrival: f64,
    replacement_duration: f64,
    config: &PlannerConfig,
) -> Window {
    let start = (arrival - config.safety_margin_before).max(0.0);
    let end = arrival + replacement_duration + config.safety_margin_after;
    Window::new(start, end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(before: f64, duration: f64, after: f64) -> PlannerConfig {
        PlannerConfig {
            replacement_duration: duration,
            safety_margin_before: before,
            safety_margin_after: after,
            ..PlannerConfig::default()
        }
    }

    #[test]
    fn empty_schedule_is_free() {
        let s = StationSchedule::new("201");
        assert!(s.is_free(&Window::new(0.0, 1e9)));
    }

    #[test]
    fn disjoint_windows_coexist() {
        // Two reservations of one station taken from a working schedule:
        // [12:11.23, 15:11.23] and [22:01.74, 25:01.74].
        let s = StationSchedule::new("201");
        let s = s.reserve(Window::new(731.23, 911.23)).unwrap();
        assert!(s.is_free(&Window::new(1321.74, 1501.74)));
    }

    #[test]
    fn one_second_overlap_conflicts() {
        let s = StationSchedule::new("201")
            .reserve(Window::new(100.0, 280.0))
            .unwrap();
        assert!(!s.is_free(&Window::new(279.0, 459.0)));
    }

    #[test]
    fn reserved_window_self_conflicts() {
        let w = Window::new(10.0, 20.0);
        let s = StationSchedule::new("201").reserve(w).unwrap();
        assert!(!s.is_free(&w));
        assert!(s.reserve(w).is_err());
    }

    #[test]
    fn insertion_order_irrelevant() {
        // Three windows of one station reserved in every order give the same
        // sorted calendar.
        let windows = [
            Window::new(717.60, 897.60),
            Window::new(1407.93, 1587.93),
            Window::new(1660.22, 1840.22),
        ];
        let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut results = vec![];
        for order in orders {
            let mut s = StationSchedule::new("203");
            for i in order {
                s = s.reserve(windows[i]).unwrap();
            }
            results.push(s);
        }
        for r in &results[1..] {
            assert_eq!(r, &results[0]);
        }
    }

    #[test]
    fn abutting_windows_both_reservable() {
        let s = StationSchedule::new("201")
            .reserve(Window::new(0.0, 180.0))
            .unwrap();
        let s = s.reserve(Window::new(180.0, 360.0)).unwrap();
        assert_eq!(s.windows.len(), 2);
    }

    #[test]
    fn reserve_does_not_mutate_original() {
        let original = StationSchedule::new("201");
        let reserved = original.reserve(Window::new(0.0, 10.0)).unwrap();
        assert!(original.windows.is_empty());
        assert_eq!(reserved.windows.len(), 1);
        assert!(original.is_free(&Window::new(0.0, 10.0)));
    }

    #[test]
    fn blocking_window_span() {
        let w = blocking_window(731.23, &cfg(30.0, 120.0, 30.0));
        assert!((w.start - 701.23).abs() < 1e-12);
        assert!((w.end - 881.23).abs() < 1e-12);
        assert!((w.end - w.start - 180.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_window_always_free() {
        let w = blocking_window(50.0, &cfg(0.0, 0.0, 0.0));
        assert_eq!(w.start, w.end);
        let s = StationSchedule::new("201")
            .reserve(Window::new(0.0, 100.0))
            .unwrap();
        assert!(s.is_free(&w));
    }

    #[test]
    fn early_arrival_clamps_to_zero() {
        let w = blocking_window(10.0, &cfg(30.0, 120.0, 30.0));
        assert_eq!(w.start, 0.0);
        assert!((w.end - 160.0).abs() < 1e-12);
    }

    // Brute-force pairwise checker, independent of Window::conflicts.
    fn pairwise_ok(windows: &[Window]) -> bool {
        for i in 0..windows.len() {
            for j in (i + 1)..windows.len() {
                let lo = windows[i].start.max(windows[j].start);
                let hi = windows[i].end.min(windows[j].end);
                if hi - lo > 0.0 {
                    return false;
                }
            }
        }
        true
    }

    proptest! {
        #[test]
        fn reserved_schedules_never_overlap(stream in proptest::collection::vec((0.0f64..5000.0, 0.0f64..400.0), 0..40)) {
            let mut s = StationSchedule::new("201");
            for (start, len) in stream {
                let w = Window::new(start, start + len);
                match s.reserve(w) {
                    Ok(next) => s = next,
                    Err(_) => prop_assert!(!pairwise_ok(&[&s.windows[..], &[w]].concat())),
                }
                prop_assert!(pairwise_ok(&s.windows));
                let sorted = s.windows.windows(2).all(|p| p[0].start <= p[1].start);
                prop_assert!(sorted);
            }
        }
    }
}
