//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;

use cosmos_core::context::{AttributeRow, CallDirection, CallRecord, SchedulerEvent, TimeInstant};
use cosmos_core::dtree::{Attribute, AttributeKind, AttributeSchema, Dataset, Instance, Value};
use cosmos_core::protocol::{ContextUpload, SettingsDocument};
use cosmos_core::settings::{Level, SettingsProfile, Switch};

pub const TIE_TOL: f64 = 1e-10;

/// Shannon entropy in bits, computed from probabilities directly.
pub fn oracle_entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / n as f64;
            h -= p * p.ln() / std::f64::consts::LN_2;
        }
    }
    h
}

/// (info gain, gain ratio) of a partition given per-branch label lists.
pub fn oracle_gain(branches: &[Vec<usize>], n_labels: usize) -> (f64, f64) {
    let all: Vec<usize> = branches.iter().flatten().copied().collect();
    let hist = |labels: &[usize]| {
        let mut h = vec![0usize; n_labels];
        for &l in labels {
            h[l] += 1;
        }
        h
    };
    let n = all.len() as f64;
    let mut remainder = 0.0;
    for b in branches.iter().filter(|b| !b.is_empty()) {
        remainder += b.len() as f64 / n * oracle_entropy(&hist(b));
    }
    let gain = oracle_entropy(&hist(&all)) - remainder;
    let sizes: Vec<usize> = branches.iter().map(Vec::len).collect();
    let split_info = oracle_entropy(&sizes);
    let ratio = if split_info > 0.0 { gain / split_info } else { 0.0 };
    (gain, ratio)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSplit {
    pub attribute: usize,
    pub threshold: Option<f64>,
    pub gain: f64,
    pub ratio: f64,
}

/// Exhaustive split search: every categorical attribute and every midpoint of
/// every continuous attribute, each partition built by direct filtering.
/// Missing values join the branch with the most known rows (smaller index on
/// ties). Selection: among candidates with positive gain at least the mean
/// positive gain, the highest ratio; earliest (attribute, threshold) on ties.
pub fn oracle_choose_split(schema: &AttributeSchema, rows: &[Instance<f64>]) -> Option<OracleSplit> {
    let n_labels = schema.labels().len();
    let mut candidates = Vec::new();
    for (a, attr) in schema.attributes().iter().enumerate() {
        match &attr.kind {
            AttributeKind::Categorical(values) => {
                let mut branches = vec![Vec::new(); values.len()];
                let mut missing = Vec::new();
                for r in rows {
                    match r.values[a] {
                        Value::Categorical(v) => branches[v].push(r.label),
                        _ => missing.push(r.label),
                    }
                }
                let max = branches.iter().map(Vec::len).max().unwrap_or(0);
                let target = branches.iter().position(|b| b.len() == max).unwrap_or(0);
                branches[target].extend(missing);
                let (gain, ratio) = oracle_gain(&branches, n_labels);
                candidates.push(OracleSplit {
                    attribute: a,
                    threshold: None,
                    gain,
                    ratio,
                });
            }
            AttributeKind::Continuous => {
                let mut distinct: Vec<f64> = rows
                    .iter()
                    .filter_map(|r| match r.values[a] {
                        Value::Continuous(x) => Some(x),
                        _ => None,
                    })
                    .collect();
                distinct.sort_by(f64::total_cmp);
                distinct.dedup();
                for w in distinct.windows(2) {
                    let mut t = (w[0] + w[1]) / 2.0;
                    if t >= w[1] || t < w[0] {
                        t = w[0];
                    }
                    let mut left = Vec::new();
                    let mut right = Vec::new();
                    let mut missing = Vec::new();
                    for r in rows {
                        match r.values[a] {
                            Value::Continuous(x) if x <= t => left.push(r.label),
                            Value::Continuous(_) => right.push(r.label),
                            _ => missing.push(r.label),
                        }
                    }
                    if left.len() >= right.len() {
                        left.extend(missing);
                    } else {
                        right.extend(missing);
                    }
                    let (gain, ratio) = oracle_gain(&[left, right], n_labels);
                    candidates.push(OracleSplit {
                        attribute: a,
                        threshold: Some(t),
                        gain,
                        ratio,
                    });
                }
            }
        }
    }
    let positive: Vec<f64> = candidates.iter().map(|c| c.gain).filter(|&g| g > TIE_TOL).collect();
    if positive.is_empty() {
        return None;
    }
    let mean = positive.iter().sum::<f64>() / positive.len() as f64;
    let eligible: Vec<&OracleSplit> = candidates
        .iter()
        .filter(|c| c.gain > TIE_TOL && c.gain >= mean - TIE_TOL)
        .collect();
    let best = eligible.iter().map(|c| c.ratio).fold(f64::NEG_INFINITY, f64::max);
    eligible.into_iter().find(|c| c.ratio >= best - TIE_TOL).copied()
}

/// Random schema with up to `max_attrs` attributes and 2-3 labels.
pub fn random_schema(rng: &mut impl Rng, max_attrs: usize) -> AttributeSchema {
    let n_attrs = rng.random_range(1..=max_attrs);
    let attrs = (0..n_attrs)
        .map(|i| {
            if rng.random_bool(0.5) {
                let k = rng.random_range(1..=4);
                Attribute::categorical(format!("c{i}"), (0..k).map(|v| format!("v{v}")))
            } else {
                Attribute::continuous(format!("x{i}"))
            }
        })
        .collect();
    let n_labels = rng.random_range(2..=3);
    AttributeSchema::new(attrs, "y", (0..n_labels).map(|l| format!("L{l}"))).unwrap()
}

/// Random attribute values. Continuous values come from a small grid so that
/// duplicates (and hence equal-value runs) are common.
pub fn random_values(rng: &mut impl Rng, schema: &AttributeSchema, missing_rate: f64) -> Vec<Value<f64>> {
    schema
        .attributes()
        .iter()
        .map(|a| {
            if rng.random_bool(missing_rate) {
                return Value::Missing;
            }
            match &a.kind {
                AttributeKind::Categorical(v) => Value::Categorical(rng.random_range(0..v.len())),
                AttributeKind::Continuous => Value::Continuous(f64::from(rng.random_range(0..12)) * 0.5 - 1.0),
            }
        })
        .collect()
}

pub fn random_dataset(rng: &mut impl Rng, max_attrs: usize, max_rows: usize, missing_rate: f64) -> Dataset<f64> {
    let schema = random_schema(rng, max_attrs);
    let n_rows = rng.random_range(1..=max_rows);
    let n_labels = schema.labels().len();
    let rows = (0..n_rows)
        .map(|_| Instance {
            values: random_values(rng, &schema, missing_rate),
            label: rng.random_range(0..n_labels),
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

fn value_key(v: &Value<f64>) -> String {
    match v {
        Value::Categorical(i) => format!("c{i}"),
        Value::Continuous(x) => format!("x{x}"),
        Value::Missing => "?".to_string(),
    }
}

/// Random dataset without missing values in which equal attribute vectors
/// always carry the same label (the first label drawn for that vector).
pub fn random_consistent_dataset(rng: &mut impl Rng, max_attrs: usize, max_rows: usize) -> Dataset<f64> {
    let schema = random_schema(rng, max_attrs);
    let n_rows = rng.random_range(1..=max_rows);
    let n_labels = schema.labels().len();
    let mut seen: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    let rows = (0..n_rows)
        .map(|_| {
            let values = random_values(rng, &schema, 0.0);
            let key: Vec<String> = values.iter().map(value_key).collect();
            let label = *seen
                .entry(key.join("|"))
                .or_insert_with(|| rng.random_range(0..n_labels));
            Instance { values, label }
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

pub fn random_switch(rng: &mut impl Rng) -> Switch {
    Switch::from(rng.random_bool(0.5))
}

pub fn random_level(rng: &mut impl Rng) -> Level {
    *Level::ALL.choose(rng).unwrap()
}

pub fn random_profile(rng: &mut impl Rng) -> SettingsProfile {
    SettingsProfile {
        bluetooth: random_switch(rng),
        gps: random_switch(rng),
        wifi: random_switch(rng),
        brightness: random_level(rng),
        ring_volume: random_level(rng),
        vibration: random_switch(rng),
    }
}

/// Category strings including XML-special characters.
pub fn random_category(rng: &mut impl Rng) -> String {
    const POOL: [&str; 10] = [
        "home",
        "office",
        "NONE",
        "UNKNOWN",
        "WORK",
        "a&b",
        "<tag>",
        "q\"uote",
        "it's",
        "caf\u{e9} x",
    ];
    POOL.choose(rng).unwrap().to_string()
}

pub fn random_row(rng: &mut impl Rng) -> AttributeRow {
    let battery_pct = match rng.random_range(0..4) {
        0 => f64::from(rng.random_range(0..=100)),
        1 => rng.random_range(0.0..=100.0),
        2 => 100.0,
        _ => f64::from(rng.random_range(0..=1000)) / 10.0,
    };
    AttributeRow {
        zone_id: random_category(rng),
        event_category: random_category(rng),
        call_count: if rng.random_bool(0.1) {
            u32::MAX
        } else {
            rng.random_range(0..20)
        },
        last_call_category: random_category(rng),
        battery_pct,
        crisis: rng.random_bool(0.3),
    }
}

pub fn random_document(rng: &mut impl Rng) -> SettingsDocument {
    let seq = if rng.random_bool(0.1) {
        u64::MAX
    } else {
        rng.random_range(0..1_000_000)
    };
    if rng.random_bool(0.3) {
        SettingsDocument::training(seq)
    } else {
        SettingsDocument::trained(random_profile(rng), seq)
    }
}

pub fn random_upload(rng: &mut impl Rng) -> ContextUpload {
    const CLIENTS: [&str; 4] = ["phone-1", "a b", "x&y<z>", "\u{3b1}\u{3b2}"];
    let observed = rng.random_bool(0.5).then(|| random_profile(rng));
    ContextUpload::new(
        random_row(rng),
        observed,
        *CLIENTS.choose(rng).unwrap(),
        TimeInstant(rng.random()),
    )
    .unwrap()
}

pub fn random_events(rng: &mut impl Rng, around: u64, spread: u64) -> Vec<SchedulerEvent> {
    (0..rng.random_range(0..10))
        .map(|i| {
            let start = around.saturating_sub(spread) + rng.random_range(0..=2 * spread);
            SchedulerEvent::new(
                format!("E{}", rng.random_range(0..3)),
                format!("t{i}"),
                TimeInstant(start),
            )
            .unwrap()
        })
        .collect()
}

pub fn random_calls(rng: &mut impl Rng, around: u64, spread: u64) -> Vec<CallRecord> {
    (0..rng.random_range(0..10))
        .map(|i| CallRecord {
            direction: if rng.random_bool(0.5) {
                CallDirection::Incoming
            } else {
                CallDirection::Outgoing
            },
            contact_id: format!("p{i}"),
            contact_category: format!("K{}", rng.random_range(0..3)),
            at: TimeInstant(around.saturating_sub(spread) + rng.random_range(0..=2 * spread)),
            duration_s: rng.random_range(0..600),
        })
        .collect()
}
