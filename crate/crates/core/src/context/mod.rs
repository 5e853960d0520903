//! Multifactor context assembly.
//!
//! A [`ContextVector`] bundles one observation of the four context factors:
//! where the device is, which scheduler events fall in the current time slot,
//! which calls happened recently, and whether the battery is in crisis. The
//! [`featurize`] step reduces it to an [`AttributeRow`] for the classifier.

pub(crate) mod zone;

pub use zone::{parse_zone_table, resolve_zone, Zone, ZoneTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zone id used when a reading falls in no declared zone.
pub const UNKNOWN_ZONE: &str = "UNKNOWN";
/// Sentinel for an absent event or call category.
pub const NONE: &str = "NONE";

/// Default half-width of the scheduler/call window: 30 minutes.
pub const DEFAULT_WINDOW_SECONDS: u64 = 1800;
/// Default critical battery threshold, in percent.
pub const DEFAULT_THRESHOLD_PCT: f64 = 15.0;

/// Whole seconds since the Unix epoch, UTC.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeInstant(pub u64);

impl TimeInstant {
    pub fn seconds(self) -> u64 {
        self.0
    }
}

/// Half-width κ of a time-slot window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    kappa_seconds: u64,
}

impl TimeWindow {
    pub fn new(kappa_seconds: u64) -> Result<Self> {
        if kappa_seconds == 0 {
            return Err(Error::domain("time window half-width must be positive"));
        }
        Ok(Self { kappa_seconds })
    }

    pub fn kappa_seconds(self) -> u64 {
        self.kappa_seconds
    }
}

impl Default for TimeWindow {
    fn default() -> Self {
        Self {
            kappa_seconds: DEFAULT_WINDOW_SECONDS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocationSource {
    Gps,
    Wifi,
}

/// Source-specific part of a location fix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Position {
    Gps { latitude: f64, longitude: f64 },
    Wifi { access_point_id: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationReading {
    position: Position,
    accuracy_m: f64,
    at: TimeInstant,
}

impl LocationReading {
    pub fn gps(latitude: f64, longitude: f64, accuracy_m: f64, at: TimeInstant) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) {
            return Err(Error::domain(format!("latitude {latitude} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::domain(format!("longitude {longitude} outside [-180, 180]")));
        }
        check_accuracy(accuracy_m)?;
        Ok(Self {
            position: Position::Gps { latitude, longitude },
            accuracy_m,
            at,
        })
    }

    pub fn wifi(access_point_id: impl Into<String>, accuracy_m: f64, at: TimeInstant) -> Result<Self> {
        check_accuracy(accuracy_m)?;
        Ok(Self {
            position: Position::Wifi {
                access_point_id: access_point_id.into(),
            },
            accuracy_m,
            at,
        })
    }

    pub fn source(&self) -> LocationSource {
        match self.position {
            Position::Gps { .. } => LocationSource::Gps,
            Position::Wifi { .. } => LocationSource::Wifi,
        }
    }

    pub fn position(&self) -> &Position {
        &self.position
    }

    pub fn accuracy_m(&self) -> f64 {
        self.accuracy_m
    }

    pub fn at(&self) -> TimeInstant {
        self.at
    }
}

fn check_accuracy(accuracy_m: f64) -> Result<()> {
    if accuracy_m.is_nan() || accuracy_m < 0.0 {
        return Err(Error::domain(format!("accuracy {accuracy_m} must be >= 0")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulerEvent {
    pub category: String,
    pub title: String,
    pub start: TimeInstant,
}

impl SchedulerEvent {
    pub fn new(category: impl Into<String>, title: impl Into<String>, start: TimeInstant) -> Result<Self> {
        let category = category.into();
        if category.is_empty() {
            return Err(Error::domain("scheduler event category must be non-empty"));
        }
        Ok(Self {
            category,
            title: title.into(),
            start,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CallDirection {
    Incoming,
    Outgoing,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub direction: CallDirection,
    pub contact_id: String,
    pub contact_category: String,
    pub at: TimeInstant,
    pub duration_s: u64,
}

/// Battery level together with the crisis flag it implies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    level_pct: f64,
    threshold_pct: f64,
    crisis: bool,
}

impl BatteryState {
    pub fn level_pct(&self) -> f64 {
        self.level_pct
    }

    pub fn threshold_pct(&self) -> f64 {
        self.threshold_pct
    }

    pub fn crisis(&self) -> bool {
        self.crisis
    }
}

/// The multifactor context set at one capture instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextVector {
    pub location: LocationReading,
    pub events: Vec<SchedulerEvent>,
    pub calls: Vec<CallRecord>,
    pub battery: BatteryState,
    pub captured_at: TimeInstant,
}

/// Classifier-facing encoding of a [`ContextVector`].
///
/// Categorical fields must be non-empty, free of surrounding whitespace and
/// control characters, and must not contain `,` or equal `?`; those
/// characters are reserved by the line-oriented file formats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeRow {
    pub zone_id: String,
    pub event_category: String,
    pub call_count: u32,
    pub last_call_category: String,
    pub battery_pct: f64,
    pub crisis: bool,
}

impl AttributeRow {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("zone", &self.zone_id),
            ("event", &self.event_category),
            ("callcat", &self.last_call_category),
        ] {
            if !is_valid_category(value) {
                return Err(Error::domain(format!("invalid {name} category {value:?}")));
            }
        }
        if !self.battery_pct.is_finite() || !(0.0..=100.0).contains(&self.battery_pct) {
            return Err(Error::domain(format!(
                "battery level {} outside [0, 100]",
                self.battery_pct
            )));
        }
        Ok(())
    }
}

pub(crate) fn is_valid_category(value: &str) -> bool {
    !value.is_empty() && value != "?" && value.trim() == value && !value.chars().any(|c| c == ',' || c.is_control())
}

/// Scheduler events whose start lies in `[now - κ, now + κ]`, in input order.
pub fn window_events(all_events: &[SchedulerEvent], now: TimeInstant, window: TimeWindow) -> Vec<SchedulerEvent> {
    let lo = now.0.saturating_sub(window.kappa_seconds);
    let hi = now.0.saturating_add(window.kappa_seconds);
    all_events
        .iter()
        .filter(|e| (lo..=hi).contains(&e.start.0))
        .cloned()
        .collect()
}

/// Calls logged in `[now - κ, now]`, in input order. Future-dated entries are
/// dropped.
pub fn window_calls(all_calls: &[CallRecord], now: TimeInstant, window: TimeWindow) -> Vec<CallRecord> {
    let lo = now.0.saturating_sub(window.kappa_seconds);
    all_calls
        .iter()
        .filter(|c| (lo..=now.0).contains(&c.at.0))
        .cloned()
        .collect()
}

pub fn assess_battery(level_pct: f64, threshold_pct: f64) -> Result<BatteryState> {
    for (name, v) in [("battery level", level_pct), ("threshold", threshold_pct)] {
        if !(0.0..=100.0).contains(&v) {
            return Err(Error::domain(format!("{name} {v} outside [0, 100]")));
        }
    }
    Ok(BatteryState {
        level_pct,
        threshold_pct,
        crisis: level_pct <= threshold_pct,
    })
}

/// Raw inputs for one context capture.
#[derive(Clone, Debug)]
pub struct ContextInputs<'a> {
    pub location: &'a LocationReading,
    pub events: &'a [SchedulerEvent],
    pub calls: &'a [CallRecord],
    pub battery_pct: f64,
    pub threshold_pct: f64,
    pub now: TimeInstant,
    pub window: TimeWindow,
}

pub fn assemble_context(inputs: &ContextInputs<'_>) -> Result<ContextVector> {
    Ok(ContextVector {
        location: inputs.location.clone(),
        events: window_events(inputs.events, inputs.now, inputs.window),
        calls: window_calls(inputs.calls, inputs.now, inputs.window),
        battery: assess_battery(inputs.battery_pct, inputs.threshold_pct)?,
        captured_at: inputs.now,
    })
}

pub fn featurize(ctx: &ContextVector, zones: &ZoneTable) -> AttributeRow {
    // earliest start wins; on equal starts the first listed event
    let event_category = ctx
        .events
        .iter()
        .reduce(|best, e| if e.start < best.start { e } else { best })
        .map_or_else(|| NONE.to_string(), |e| e.category.clone());
    // most recent call; on equal times the last listed call
    let last_call_category = ctx
        .calls
        .iter()
        .reduce(|best, c| if c.at >= best.at { c } else { best })
        .map_or_else(|| NONE.to_string(), |c| c.contact_category.clone());
    AttributeRow {
        zone_id: resolve_zone(&ctx.location, zones),
        event_category,
        call_count: u32::try_from(ctx.calls.len()).unwrap_or(u32::MAX),
        last_call_category,
        battery_pct: ctx.battery.level_pct,
        crisis: ctx.battery.crisis,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(cat: &str, t: u64) -> SchedulerEvent {
        SchedulerEvent::new(cat, "", TimeInstant(t)).unwrap()
    }

    fn call(cat: &str, t: u64) -> CallRecord {
        CallRecord {
            direction: CallDirection::Incoming,
            contact_id: "c".into(),
            contact_category: cat.into(),
            at: TimeInstant(t),
            duration_s: 0,
        }
    }

    #[test]
    fn event_window_is_two_sided_and_inclusive() {
        let w = TimeWindow::new(100).unwrap();
        let events = vec![ev("A", 899), ev("B", 900), ev("C", 1000), ev("D", 1100), ev("E", 1101)];
        let got = window_events(&events, TimeInstant(1000), w);
        let cats: Vec<_> = got.iter().map(|e| e.category.as_str()).collect();
        assert_eq!(cats, ["B", "C", "D"]);
        assert!(window_events(&[], TimeInstant(1000), w).is_empty());
    }

    #[test]
    fn window_near_epoch_does_not_underflow() {
        let w = TimeWindow::new(1800).unwrap();
        let got = window_events(&[ev("A", 0)], TimeInstant(10), w);
        assert_eq!(got.len(), 1);
    }

    #[test]
    fn call_window_excludes_future_entries() {
        let w = TimeWindow::new(100).unwrap();
        let calls = vec![call("A", 899), call("B", 900), call("C", 1000), call("D", 1001)];
        let got = window_calls(&calls, TimeInstant(1000), w);
        let cats: Vec<_> = got.iter().map(|c| c.contact_category.as_str()).collect();
        assert_eq!(cats, ["B", "C"]);
    }

    #[test]
    fn zero_window_rejected() {
        assert!(TimeWindow::new(0).is_err());
    }

    #[test]
    fn battery_crisis_uses_inclusive_threshold() {
        assert!(assess_battery(15.0, 15.0).unwrap().crisis());
        assert!(!assess_battery(100.0, 15.0).unwrap().crisis());
        assert!(assess_battery(14.9, 15.0).unwrap().crisis());
        assert!(matches!(assess_battery(101.0, 15.0), Err(Error::Domain(_))));
        assert!(matches!(assess_battery(50.0, -1.0), Err(Error::Domain(_))));
        assert!(assess_battery(f64::NAN, 15.0).is_err());
    }

    #[test]
    fn gps_reading_validates_ranges() {
        assert!(LocationReading::gps(91.0, 0.0, 5.0, TimeInstant(0)).is_err());
        assert!(LocationReading::gps(0.0, -180.5, 5.0, TimeInstant(0)).is_err());
        assert!(LocationReading::gps(0.0, 0.0, -1.0, TimeInstant(0)).is_err());
        let r = LocationReading::gps(45.0, 90.0, 5.0, TimeInstant(0)).unwrap();
        assert_eq!(r.source(), LocationSource::Gps);
    }

    #[test]
    fn featurize_empty_context_uses_sentinels() {
        let loc = LocationReading::wifi("nowhere", 10.0, TimeInstant(5)).unwrap();
        let ctx = assemble_context(&ContextInputs {
            location: &loc,
            events: &[],
            calls: &[],
            battery_pct: 10.0,
            threshold_pct: 15.0,
            now: TimeInstant(5000),
            window: TimeWindow::default(),
        })
        .unwrap();
        assert!(ctx.events.is_empty() && ctx.calls.is_empty());
        assert!(ctx.battery.crisis());
        let row = featurize(&ctx, &ZoneTable::default());
        assert_eq!(row.zone_id, UNKNOWN_ZONE);
        assert_eq!(row.event_category, NONE);
        assert_eq!(row.call_count, 0);
        assert_eq!(row.last_call_category, NONE);
        assert!(row.crisis);
    }

    #[test]
    fn featurize_picks_earliest_event_and_latest_call() {
        let loc = LocationReading::wifi("ap", 10.0, TimeInstant(5)).unwrap();
        let ctx = ContextVector {
            location: loc,
            events: vec![ev("GYM", 2000), ev("MEETING", 1500)],
            calls: vec![call("WORK", 900), call("FAMILY", 950), call("UNKNOWN", 920)],
            battery: assess_battery(80.0, 15.0).unwrap(),
            captured_at: TimeInstant(1000),
        };
        let row = featurize(&ctx, &ZoneTable::default());
        assert_eq!(row.event_category, "MEETING");
        assert_eq!(row.last_call_category, "FAMILY");
        assert_eq!(row.call_count, 3);
    }

    #[test]
    fn attribute_row_validation() {
        let mut row = AttributeRow {
            zone_id: "home".into(),
            event_category: NONE.into(),
            call_count: 0,
            last_call_category: NONE.into(),
            battery_pct: 50.0,
            crisis: false,
        };
        row.validate().unwrap();
        row.zone_id = "a,b".into();
        assert!(row.validate().is_err());
        row.zone_id = "?".into();
        assert!(row.validate().is_err());
        row.zone_id = " x".into();
        assert!(row.validate().is_err());
        row.zone_id = "x".into();
        row.battery_pct = f64::INFINITY;
        assert!(row.validate().is_err());
    }
}
