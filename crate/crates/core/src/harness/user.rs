//! Synthetic user: a first-match rule list over context rows plus seeded
//! per-field noise.
//!
//! File format, one record per line, `#` starts a comment:
//!
//! ```text
//! noise;0.1
//! default;0,0,1,50,75,0
//! rule;crisis=yes;0,0,0,25,50,1
//! rule;zone=office&event=MEETING;0,0,1,50,0,1
//! rule;battery<=40&callcount>=1;0,0,1,25,50,1
//! ```
//!
//! Predicate fields are `zone`, `event`, `callcat`, `callcount`, `battery` and
//! `crisis`; operators are `=`, `!=`, `<`, `<=`, `>`, `>=` (ordering operators
//! only on the numeric fields). `*` matches every row.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::context::zone::strip_comment;
use crate::context::AttributeRow;
use crate::error::{Error, Result};
use crate::settings::{Level, Setting, SettingsProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CompareOp::Eq => ord == Equal,
            CompareOp::Ne => ord != Equal,
            CompareOp::Lt => ord == Less,
            CompareOp::Le => ord != Greater,
            CompareOp::Gt => ord == Greater,
            CompareOp::Ge => ord != Less,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    Any,
    Zone(CompareOp, String),
    Event(CompareOp, String),
    CallCategory(CompareOp, String),
    CallCount(CompareOp, u32),
    Battery(CompareOp, f64),
    Crisis(bool),
}

impl Predicate {
    pub fn matches(&self, row: &AttributeRow) -> bool {
        match self {
            Predicate::Any => true,
            Predicate::Zone(op, v) => op.holds(row.zone_id.as_str().cmp(v.as_str())),
            Predicate::Event(op, v) => op.holds(row.event_category.as_str().cmp(v.as_str())),
            Predicate::CallCategory(op, v) => op.holds(row.last_call_category.as_str().cmp(v.as_str())),
            Predicate::CallCount(op, v) => op.holds(row.call_count.cmp(v)),
            Predicate::Battery(op, v) => row.battery_pct.partial_cmp(v).is_some_and(|o| op.holds(o)),
            Predicate::Crisis(v) => row.crisis == *v,
        }
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let text = text.trim();
        if text == "*" {
            return Ok(Predicate::Any);
        }
        // two-character operators first so `<=` is not read as `<`
        const OPS: [(&str, CompareOp); 6] = [
            ("!=", CompareOp::Ne),
            ("<=", CompareOp::Le),
            (">=", CompareOp::Ge),
            ("=", CompareOp::Eq),
            ("<", CompareOp::Lt),
            (">", CompareOp::Gt),
        ];
        let (field, op, value) = OPS
            .iter()
            .find_map(|(sym, op)| text.split_once(sym).map(|(f, v)| (f.trim(), *op, v.trim())))
            .ok_or_else(|| format!("no comparison operator in {text:?}"))?;
        let equality = matches!(op, CompareOp::Eq | CompareOp::Ne);
        let categorical = |v: &str| -> std::result::Result<String, String> {
            if !equality {
                return Err(format!("field {field:?} supports only `=` and `!=`"));
            }
            if v.is_empty() {
                return Err(format!("empty value in {text:?}"));
            }
            Ok(v.to_string())
        };
        match field {
            "zone" => Ok(Predicate::Zone(op, categorical(value)?)),
            "event" => Ok(Predicate::Event(op, categorical(value)?)),
            "callcat" => Ok(Predicate::CallCategory(op, categorical(value)?)),
            "callcount" => Ok(Predicate::CallCount(
                op,
                value.parse().map_err(|_| format!("bad call count {value:?}"))?,
            )),
            "battery" => {
                let v: f64 = value.parse().map_err(|_| format!("bad battery level {value:?}"))?;
                if !v.is_finite() {
                    return Err(format!("bad battery level {value:?}"));
                }
                Ok(Predicate::Battery(op, v))
            }
            "crisis" => {
                let v = match value {
                    "yes" | "YES" => true,
                    "no" | "NO" => false,
                    _ => return Err(format!("crisis must be yes or no, got {value:?}")),
                };
                match op {
                    CompareOp::Eq => Ok(Predicate::Crisis(v)),
                    CompareOp::Ne => Ok(Predicate::Crisis(!v)),
                    _ => Err("crisis supports only `=` and `!=`".to_string()),
                }
            }
            other => Err(format!("unknown predicate field {other:?}")),
        }
    }

    fn to_text(&self) -> String {
        match self {
            Predicate::Any => "*".to_string(),
            Predicate::Zone(op, v) => format!("zone{}{v}", op.symbol()),
            Predicate::Event(op, v) => format!("event{}{v}", op.symbol()),
            Predicate::CallCategory(op, v) => format!("callcat{}{v}", op.symbol()),
            Predicate::CallCount(op, v) => format!("callcount{}{v}", op.symbol()),
            Predicate::Battery(op, v) => format!("battery{}{v}", op.symbol()),
            Predicate::Crisis(v) => format!("crisis={}", if *v { "yes" } else { "no" }),
        }
    }
}

/// Conjunction of predicates mapped to a preferred profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub when: Vec<Predicate>,
    pub profile: SettingsProfile,
}

impl Rule {
    pub fn matches(&self, row: &AttributeRow) -> bool {
        self.when.iter().all(|p| p.matches(row))
    }
}

/// Rule-based preference oracle. When no rule matches, the default profile
/// applies; without a default, the script's own truth column does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    pub rules: Vec<Rule>,
    pub noise_rate: f64,
    pub default_profile: Option<SettingsProfile>,
}

impl UserModel {
    pub fn new(rules: Vec<Rule>, noise_rate: f64, default_profile: Option<SettingsProfile>) -> Result<Self> {
        let model = Self {
            rules,
            noise_rate,
            default_profile,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::usage(format!("noise rate {} outside [0, 1)", self.noise_rate)));
        }
        Ok(())
    }

    pub fn with_noise(&self, noise_rate: f64) -> Result<Self> {
        Self::new(self.rules.clone(), noise_rate, self.default_profile)
    }

    /// Noise-free preference for a row.
    pub fn preferred(&self, row: &AttributeRow, script_truth: &SettingsProfile) -> SettingsProfile {
        self.rules
            .iter()
            .find(|r| r.matches(row))
            .map(|r| r.profile)
            .or(self.default_profile)
            .unwrap_or(*script_truth)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        let mut noise_rate = 0.0;
        let mut default_profile = None;
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::parse("user", i + 1, msg);
            let fields: Vec<&str> = line.split(';').map(str::trim).collect();
            match fields.as_slice() {
                ["noise", rate] => noise_rate = rate.parse().map_err(|_| err(format!("bad noise rate {rate:?}")))?,
                ["default", profile] => {
                    default_profile = Some(SettingsProfile::from_compact(profile).map_err(|e| err(e.to_string()))?)
                }
                ["rule", when, profile] => {
                    let when = when
                        .split('&')
                        .map(Predicate::parse)
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(err)?;
                    let profile = SettingsProfile::from_compact(profile).map_err(|e| err(e.to_string()))?;
                    rules.push(Rule { when, profile });
                }
                _ => return Err(err(format!("unrecognised record {line:?}"))),
            }
        }
        Self::new(rules, noise_rate, default_profile)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("noise;{}\n", self.noise_rate);
        if let Some(p) = &self.default_profile {
            out.push_str(&format!("default;{}\n", p.to_compact()));
        }
        for r in &self.rules {
            let when: Vec<String> = r.when.iter().map(Predicate::to_text).collect();
            out.push_str(&format!("rule;{};{}\n", when.join("&"), r.profile.to_compact()));
        }
        out
    }
}

/// Seeded per-field noise.
///
/// Every call consumes the same random draws whatever the rate, so runs that
/// differ only in noise rate see common random numbers: a field flipped at
/// rate `a` is also flipped at any rate `b > a`, to the same value.
#[derive(Clone, Debug)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn perturb(&mut self, profile: SettingsProfile, rate: f64) -> SettingsProfile {
        let mut out = profile;
        for setting in Setting::ALL {
            let u: f64 = self.rng.random();
            let pick: usize = self.rng.random_range(0..Level::ALL.len() - 1);
            if u >= rate {
                continue;
            }
            match setting {
                Setting::Bluetooth => out.bluetooth = out.bluetooth.toggled(),
                Setting::Gps => out.gps = out.gps.toggled(),
                Setting::Wifi => out.wifi = out.wifi.toggled(),
                Setting::Vibration => out.vibration = out.vibration.toggled(),
                Setting::Brightness => out.brightness = other_level(out.brightness, pick),
                Setting::RingVolume => out.ring_volume = other_level(out.ring_volume, pick),
            }
        }
        out
    }
}

/// The `pick`-th level different from `current`.
fn other_level(current: Level, pick: usize) -> Level {
    let others: Vec<Level> = Level::ALL.into_iter().filter(|&l| l != current).collect();
    others[pick]
}
