//! Scripted device timelines.
//!
//! File format, one record per line, `#` starts a comment:
//!
//! ```text
//! seed;7
//! window;1800
//! threshold;15
//! zone;home,12.9716,77.5946,150,home-ap
//! tick;<epoch>;<lat>,<lon>|wifi:<ap>;<cat@epoch,...>;<dir,cat@epoch,...>;<battery%>;<B,P,W,Y,R,V>
//! ```
//!
//! Directions are `in` or `out`. Empty event or call fields mean none.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::context::zone::{parse_zone_line, strip_comment, zone_line};
use crate::context::{
    CallDirection, CallRecord, LocationReading, Position, SchedulerEvent, TimeInstant, TimeWindow, Zone, ZoneTable,
    DEFAULT_THRESHOLD_PCT,
};
use crate::error::{Error, Result};
use crate::settings::SettingsProfile;

/// Accuracy attached to scripted location fixes, in metres.
pub const SCRIPT_ACCURACY_M: f64 = 10.0;
/// Duration attached to scripted calls, in seconds.
pub const SCRIPT_CALL_SECONDS: u64 = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    pub at: TimeInstant,
    pub location: LocationReading,
    pub events: Vec<SchedulerEvent>,
    pub calls: Vec<CallRecord>,
    pub battery_pct: f64,
    pub truth: SettingsProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub seed: u64,
    pub zones: ZoneTable,
    pub window: TimeWindow,
    pub threshold_pct: f64,
    pub ticks: Vec<Tick>,
}

impl ScenarioScript {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.threshold_pct) {
            return Err(Error::usage(format!(
                "threshold {} outside [0, 100]",
                self.threshold_pct
            )));
        }
        for (i, pair) in self.ticks.windows(2).enumerate() {
            if pair[1].at <= pair[0].at {
                return Err(Error::usage(format!("tick {} is not later than tick {}", i + 2, i + 1)));
            }
        }
        for (i, t) in self.ticks.iter().enumerate() {
            if !(0.0..=100.0).contains(&t.battery_pct) {
                return Err(Error::usage(format!(
                    "tick {}: battery {} outside [0, 100]",
                    i + 1,
                    t.battery_pct
                )));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut seed = 0;
        let mut window = TimeWindow::default();
        let mut threshold_pct = DEFAULT_THRESHOLD_PCT;
        let mut zones: Vec<Zone> = Vec::new();
        let mut ticks = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::parse("scenario", i + 1, msg);
            let (kind, rest) = line
                .split_once(';')
                .ok_or_else(|| err(format!("expected `<kind>;...`, got {line:?}")))?;
            match kind {
                "seed" => seed = rest.trim().parse().map_err(|_| err(format!("bad seed {rest:?}")))?,
                "window" => {
                    let k = rest.trim().parse().map_err(|_| err(format!("bad window {rest:?}")))?;
                    window = TimeWindow::new(k).map_err(|e| err(e.to_string()))?;
                }
                "threshold" => {
                    threshold_pct = rest
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad threshold {rest:?}")))?
                }
                "zone" => zones.push(parse_zone_line(rest).map_err(err)?),
                "tick" => ticks.push(parse_tick(rest).map_err(err)?),
                other => return Err(err(format!("unknown record kind {other:?}"))),
            }
        }
        let script = Self {
            seed,
            zones: ZoneTable::new(zones)?,
            window,
            threshold_pct,
            ticks,
        };
        script.validate()?;
        Ok(script)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed;{}", self.seed);
        let _ = writeln!(out, "window;{}", self.window.kappa_seconds());
        let _ = writeln!(out, "threshold;{}", self.threshold_pct);
        for z in self.zones.zones() {
            let _ = writeln!(out, "zone;{}", zone_line(z));
        }
        for t in &self.ticks {
            out.push_str(&tick_line(t));
            out.push('\n');
        }
        out
    }
}

fn tick_line(t: &Tick) -> String {
    let location = match t.location.position() {
        Position::Gps { latitude, longitude } => format!("{latitude},{longitude}"),
        Position::Wifi { access_point_id } => format!("wifi:{access_point_id}"),
    };
    let events: Vec<String> = t
        .events
        .iter()
        .map(|e| format!("{}@{}", e.category, e.start.0))
        .collect();
    let calls: Vec<String> = t
        .calls
        .iter()
        .map(|c| {
            let dir = match c.direction {
                CallDirection::Incoming => "in",
                CallDirection::Outgoing => "out",
            };
            format!("{dir},{}@{}", c.contact_category, c.at.0)
        })
        .collect();
    format!(
        "tick;{};{};{};{};{};{}",
        t.at.0,
        location,
        events.join(","),
        calls.join(","),
        t.battery_pct,
        t.truth.to_compact()
    )
}

fn split_at_sign(item: &str) -> std::result::Result<(&str, TimeInstant), String> {
    let (cat, at) = item
        .rsplit_once('@')
        .ok_or_else(|| format!("expected `<category>@<epoch>`, got {item:?}"))?;
    let at = at.trim().parse().map_err(|_| format!("bad epoch in {item:?}"))?;
    Ok((cat.trim(), TimeInstant(at)))
}

fn parse_tick(rest: &str) -> std::result::Result<Tick, String> {
    let fields: Vec<&str> = rest.split(';').map(str::trim).collect();
    if fields.len() != 6 {
        return Err(format!("tick needs 6 fields after `tick;`, got {}", fields.len()));
    }
    let at = TimeInstant(fields[0].parse().map_err(|_| format!("bad epoch {:?}", fields[0]))?);
    let location = match fields[1].strip_prefix("wifi:") {
        Some(ap) => LocationReading::wifi(ap, SCRIPT_ACCURACY_M, at),
        None => {
            let (lat, lon) = fields[1]
                .split_once(',')
                .ok_or_else(|| format!("expected `<lat>,<lon>` or `wifi:<ap>`, got {:?}", fields[1]))?;
            let lat = lat.trim().parse().map_err(|_| format!("bad latitude {lat:?}"))?;
            let lon = lon.trim().parse().map_err(|_| format!("bad longitude {lon:?}"))?;
            LocationReading::gps(lat, lon, SCRIPT_ACCURACY_M, at)
        }
    }
    .map_err(|e| e.to_string())?;

    let mut events = Vec::new();
    for item in fields[2].split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (cat, start) = split_at_sign(item)?;
        events.push(SchedulerEvent::new(cat, "", start).map_err(|e| e.to_string())?);
    }

    let mut calls = Vec::new();
    let tokens: Vec<&str> = fields[3].split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if !tokens.len().is_multiple_of(2) {
        return Err(format!("calls must be `dir,cat@epoch` pairs, got {:?}", fields[3]));
    }
    for (n, pair) in tokens.chunks(2).enumerate() {
        let direction = match pair[0] {
            "in" => CallDirection::Incoming,
            "out" => CallDirection::Outgoing,
            other => return Err(format!("call direction must be `in` or `out`, got {other:?}")),
        };
        let (cat, at) = split_at_sign(pair[1])?;
        if cat.is_empty() {
            return Err(format!("empty call category in {:?}", pair[1]));
        }
        calls.push(CallRecord {
            direction,
            contact_id: format!("c{n}"),
            contact_category: cat.to_string(),
            at,
            duration_s: SCRIPT_CALL_SECONDS,
        });
    }

    let battery_pct = fields[4].parse().map_err(|_| format!("bad battery {:?}", fields[4]))?;
    let truth = SettingsProfile::from_compact(fields[5]).map_err(|e| e.to_string())?;
    Ok(Tick {
        at,
        location,
        events,
        calls,
        battery_pct,
        truth,
    })
}
