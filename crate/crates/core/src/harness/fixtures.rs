//! Built-in synthetic workload: a repeating weekday routine across three
//! zones, with meetings, calls and an evening battery crisis.

use super::scenario::{ScenarioScript, Tick};
use super::user::{CompareOp, Predicate, Rule, UserModel};
use crate::context::{
    assemble_context, featurize, CallDirection, CallRecord, ContextInputs, LocationReading, SchedulerEvent,
    TimeInstant, TimeWindow, Zone, ZoneTable, DEFAULT_THRESHOLD_PCT,
};
use crate::error::Result;
use crate::settings::SettingsProfile;

/// 2024-01-01T00:00:00Z.
pub const ROUTINE_EPOCH: u64 = 1_704_067_200;
pub const SLOTS_PER_DAY: usize = 20;
const FIRST_SLOT_HOUR: u64 = 5;
const SLOT_SECONDS: u64 = 3600;

const HOME: (f64, f64) = (12.9716, 77.5946);
const OFFICE: (f64, f64) = (12.98, 77.60);
const GYM: (f64, f64) = (12.965, 77.59);

pub fn routine_zones() -> ZoneTable {
    let zone = |id: &str, (lat, lon): (f64, f64), radius_m: f64, ap: Option<&str>| Zone {
        id: id.to_string(),
        center_lat: lat,
        center_lon: lon,
        radius_m,
        wifi_ids: ap.into_iter().map(str::to_string).collect(),
    };
    ZoneTable::new(vec![
        zone("home", HOME, 150.0, Some("home-ap")),
        zone("office", OFFICE, 200.0, Some("office-ap")),
        zone("gym", GYM, 100.0, None),
    ])
    .expect("built-in zones are valid")
}

fn profile(compact: &str) -> SettingsProfile {
    SettingsProfile::from_compact(compact).expect("built-in profile is valid")
}

/// Rule set matching [`daily_routine`].
pub fn routine_user(noise_rate: f64) -> Result<UserModel> {
    let eq = |f: fn(CompareOp, String) -> Predicate, v: &str| f(CompareOp::Eq, v.to_string());
    let rules = vec![
        Rule {
            when: vec![Predicate::Crisis(true)],
            profile: profile("0,0,0,25,50,1"),
        },
        Rule {
            when: vec![eq(Predicate::Event, "MEETING")],
            profile: profile("0,0,1,50,0,1"),
        },
        Rule {
            when: vec![eq(Predicate::CallCategory, "WORK")],
            profile: profile("0,0,1,75,100,1"),
        },
        Rule {
            when: vec![eq(Predicate::Zone, "office")],
            profile: profile("0,0,1,75,50,1"),
        },
        Rule {
            when: vec![eq(Predicate::Zone, "gym")],
            profile: profile("1,1,0,100,100,0"),
        },
        Rule {
            when: vec![eq(Predicate::Zone, "home")],
            profile: profile("0,0,1,50,75,0"),
        },
    ];
    UserModel::new(rules, noise_rate, Some(profile("0,0,1,50,50,1")))
}

fn slot_time(day: usize, slot: usize) -> TimeInstant {
    TimeInstant(ROUTINE_EPOCH + day as u64 * 86_400 + (FIRST_SLOT_HOUR + slot as u64) * SLOT_SECONDS)
}

/// `days` identical days of [`SLOTS_PER_DAY`] hourly ticks from 05:00 UTC.
///
/// Slots 0-4 and 16-19 are at home, 5-12 at the office (WiFi fix) with
/// meetings starting ten minutes after slots 7 and 9, 13-15 at the gym. A work
/// call lands fifteen minutes before slot 6 and a family call five minutes
/// before slot 17. The battery drops 5% per slot from 100%, so the last three
/// slots are in crisis. Each tick lists the whole day's calendar and the calls
/// made so far; the truth column is the noise-free preference of
/// [`routine_user`].
pub fn daily_routine(days: usize, seed: u64) -> ScenarioScript {
    let zones = routine_zones();
    let window = TimeWindow::default();
    let user = routine_user(0.0).expect("zero noise is valid");
    let mut ticks = Vec::with_capacity(days * SLOTS_PER_DAY);
    for day in 0..days {
        let meetings: Vec<SchedulerEvent> = [7, 9]
            .into_iter()
            .map(|slot| SchedulerEvent::new("MEETING", "", TimeInstant(slot_time(day, slot).0 + 600)).expect("valid"))
            .collect();
        let day_calls = [
            (CallDirection::Incoming, "WORK", slot_time(day, 6).0 - 900),
            (CallDirection::Outgoing, "FAMILY", slot_time(day, 17).0 - 300),
        ];
        for slot in 0..SLOTS_PER_DAY {
            let at = slot_time(day, slot);
            let location = match slot {
                5..=12 => LocationReading::wifi("office-ap", 10.0, at),
                13..=15 => LocationReading::gps(GYM.0 + 0.0002, GYM.1, 10.0, at),
                _ => LocationReading::gps(HOME.0, HOME.1 + 0.0003, 10.0, at),
            }
            .expect("valid reading");
            let events = if (5..=12).contains(&slot) {
                meetings.clone()
            } else {
                Vec::new()
            };
            let calls: Vec<CallRecord> = day_calls
                .iter()
                .filter(|(_, _, t)| *t <= at.0)
                .enumerate()
                .map(|(n, (direction, cat, t))| CallRecord {
                    direction: *direction,
                    contact_id: format!("c{n}"),
                    contact_category: cat.to_string(),
                    at: TimeInstant(*t),
                    duration_s: super::scenario::SCRIPT_CALL_SECONDS,
                })
                .collect();
            let battery_pct = 100.0 - 5.0 * slot as f64;
            let ctx = assemble_context(&ContextInputs {
                location: &location,
                events: &events,
                calls: &calls,
                battery_pct,
                threshold_pct: DEFAULT_THRESHOLD_PCT,
                now: at,
                window,
            })
            .expect("valid context");
            let row = featurize(&ctx, &zones);
            let fallback = profile("0,0,1,50,50,1");
            let truth = user.preferred(&row, &fallback);
            ticks.push(Tick {
                at,
                location,
                events,
                calls,
                battery_pct,
                truth,
            });
        }
    }
    ScenarioScript {
        seed,
        zones,
        window,
        threshold_pct: DEFAULT_THRESHOLD_PCT,
        ticks,
    }
}
