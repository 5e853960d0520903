//! The six-setting device profile and the low-battery override.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::context::{AttributeRow, BatteryState};
use crate::dtree::{DecisionTree, Value};
use crate::error::{Error, Result};
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Switch {
    Off,
    On,
}

impl Switch {
    pub const ALL: [Switch; 2] = [Switch::Off, Switch::On];

    pub fn label(self) -> &'static str {
        match self {
            Switch::Off => "OFF",
            Switch::On => "ON",
        }
    }

    pub fn is_on(self) -> bool {
        self == Switch::On
    }

    pub fn toggled(self) -> Self {
        match self {
            Switch::Off => Switch::On,
            Switch::On => Switch::Off,
        }
    }
}

impl From<bool> for Switch {
    fn from(on: bool) -> Self {
        if on {
            Switch::On
        } else {
            Switch::Off
        }
    }
}

/// Percent level binned to 0/25/50/75/100.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    P0,
    P25,
    P50,
    P75,
    P100,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::P0, Level::P25, Level::P50, Level::P75, Level::P100];

    pub fn percent(self) -> u8 {
        match self {
            Level::P0 => 0,
            Level::P25 => 25,
            Level::P50 => 50,
            Level::P75 => 75,
            Level::P100 => 100,
        }
    }

    pub fn from_percent(p: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|l| u32::from(l.percent()) == p)
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::P0 => "0",
            Level::P25 => "25",
            Level::P50 => "50",
            Level::P75 => "75",
            Level::P100 => "100",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    Bluetooth,
    Gps,
    Wifi,
    Brightness,
    RingVolume,
    Vibration,
}

impl Setting {
    /// Canonical field order.
    pub const ALL: [Setting; 6] = [
        Setting::Bluetooth,
        Setting::Gps,
        Setting::Wifi,
        Setting::Brightness,
        Setting::RingVolume,
        Setting::Vibration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Bluetooth => "bluetooth",
            Setting::Gps => "gps",
            Setting::Wifi => "wifi",
            Setting::Brightness => "brightness",
            Setting::RingVolume => "ring_volume",
            Setting::Vibration => "vibration",
        }
    }

    pub fn is_level(self) -> bool {
        matches!(self, Setting::Brightness | Setting::RingVolume)
    }

    /// Classifier label domain, in label order.
    pub fn labels(self) -> Vec<&'static str> {
        if self.is_level() {
            Level::ALL.iter().map(|l| l.label()).collect()
        } else {
            Switch::ALL.iter().map(|s| s.label()).collect()
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown setting {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SettingsProfile {
    pub bluetooth: Switch,
    pub gps: Switch,
    pub wifi: Switch,
    pub brightness: Level,
    pub ring_volume: Level,
    pub vibration: Switch,
}

/// Placeholder carried by training-phase responses; clients ignore it.
pub const SENTINEL_PROFILE: SettingsProfile = SettingsProfile {
    bluetooth: Switch::Off,
    gps: Switch::Off,
    wifi: Switch::On,
    brightness: Level::P50,
    ring_volume: Level::P50,
    vibration: Switch::On,
};

impl SettingsProfile {
    /// Label of one field, as used in classifier label domains.
    pub fn label(&self, setting: Setting) -> &'static str {
        match setting {
            Setting::Bluetooth => self.bluetooth.label(),
            Setting::Gps => self.gps.label(),
            Setting::Wifi => self.wifi.label(),
            Setting::Brightness => self.brightness.label(),
            Setting::RingVolume => self.ring_volume.label(),
            Setting::Vibration => self.vibration.label(),
        }
    }

    /// Index of one field's value within [`Setting::labels`].
    pub fn label_index(&self, setting: Setting) -> usize {
        let label = self.label(setting);
        setting.labels().iter().position(|l| *l == label).unwrap_or(0)
    }

    pub fn with_label(mut self, setting: Setting, label: &str) -> Result<Self> {
        let bad = || Error::usage(format!("{label:?} is not a value of {setting}"));
        let switch = || Switch::ALL.into_iter().find(|s| s.label() == label).ok_or_else(bad);
        let level = || Level::ALL.into_iter().find(|l| l.label() == label).ok_or_else(bad);
        match setting {
            Setting::Bluetooth => self.bluetooth = switch()?,
            Setting::Gps => self.gps = switch()?,
            Setting::Wifi => self.wifi = switch()?,
            Setting::Brightness => self.brightness = level()?,
            Setting::RingVolume => self.ring_volume = level()?,
            Setting::Vibration => self.vibration = switch()?,
        }
        Ok(self)
    }

    /// Compact `B,P,W,Y,R,V` form with `1`/`0` switches and percent levels.
    pub fn to_compact(&self) -> String {
        let s = |x: Switch| if x.is_on() { "1" } else { "0" };
        format!(
            "{},{},{},{},{},{}",
            s(self.bluetooth),
            s(self.gps),
            s(self.wifi),
            self.brightness.percent(),
            self.ring_volume.percent(),
            s(self.vibration)
        )
    }

    /// Parses the compact form; switches accept `1/0` or `ON/OFF`.
    pub fn from_compact(text: &str) -> Result<Self> {
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(Error::usage(format!("profile needs 6 fields, got {:?}", text)));
        }
        let switch = |f: &str| match f.to_ascii_uppercase().as_str() {
            "1" | "ON" => Ok(Switch::On),
            "0" | "OFF" => Ok(Switch::Off),
            _ => Err(Error::usage(format!("bad switch value {f:?}"))),
        };
        let level = |f: &str| {
            f.parse::<u32>()
                .ok()
                .and_then(Level::from_percent)
                .ok_or_else(|| Error::usage(format!("bad level value {f:?}")))
        };
        Ok(Self {
            bluetooth: switch(fields[0])?,
            gps: switch(fields[1])?,
            wifi: switch(fields[2])?,
            brightness: level(fields[3])?,
            ring_volume: level(fields[4])?,
            vibration: switch(fields[5])?,
        })
    }
}

/// Settings exempt from the low-battery override.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalServices {
    protected: BTreeSet<Setting>,
}

impl CriticalServices {
    pub fn new(protected: impl IntoIterator<Item = Setting>) -> Self {
        Self {
            protected: protected.into_iter().collect(),
        }
    }

    pub fn none() -> Self {
        Self::new([])
    }

    pub fn contains(&self, setting: Setting) -> bool {
        self.protected.contains(&setting)
    }

    pub fn protected(&self) -> impl Iterator<Item = Setting> + '_ {
        self.protected.iter().copied()
    }

    /// One setting name per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut protected = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let s = line
                .parse::<Setting>()
                .map_err(|e| Error::parse("critical services", i + 1, e.to_string()))?;
            protected.insert(s);
        }
        Ok(Self { protected })
    }
}

impl Default for CriticalServices {
    fn default() -> Self {
        Self::new([Setting::RingVolume, Setting::Vibration])
    }
}

/// Anything that reports whether the battery is in crisis.
pub trait CrisisSignal {
    fn in_crisis(&self) -> bool;
}

impl CrisisSignal for BatteryState {
    fn in_crisis(&self) -> bool {
        self.crisis()
    }
}

impl CrisisSignal for AttributeRow {
    fn in_crisis(&self) -> bool {
        self.crisis
    }
}

impl CrisisSignal for bool {
    fn in_crisis(&self) -> bool {
        *self
    }
}

/// Low-battery override: radios off and brightness capped at 25, except for
/// protected settings. Ring volume and vibration are never touched.
pub fn apply_battery_override(
    profile: SettingsProfile,
    battery: &impl CrisisSignal,
    critical: &CriticalServices,
) -> SettingsProfile {
    if !battery.in_crisis() {
        return profile;
    }
    let mut out = profile;
    if !critical.contains(Setting::Bluetooth) {
        out.bluetooth = Switch::Off;
    }
    if !critical.contains(Setting::Gps) {
        out.gps = Switch::Off;
    }
    if !critical.contains(Setting::Wifi) {
        out.wifi = Switch::Off;
    }
    if !critical.contains(Setting::Brightness) {
        out.brightness = out.brightness.min(Level::P25);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileDiff {
    pub matches: usize,
    pub mismatched: Vec<Setting>,
}

pub fn diff_profiles(a: &SettingsProfile, b: &SettingsProfile) -> ProfileDiff {
    let mismatched: Vec<Setting> = Setting::ALL.into_iter().filter(|&s| a.label(s) != b.label(s)).collect();
    ProfileDiff {
        matches: Setting::ALL.len() - mismatched.len(),
        mismatched,
    }
}

/// One classifier per setting, in [`Setting::ALL`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct ProfileTrees<F> {
    trees: Vec<DecisionTree<F>>,
}

impl<F: Scalar> ProfileTrees<F> {
    /// Checks that every tree's label domain is its setting's value set and
    /// that all trees share one attribute list.
    pub fn new(trees: Vec<DecisionTree<F>>) -> Result<Self> {
        if trees.len() != Setting::ALL.len() {
            return Err(Error::usage(format!("expected 6 trees, got {}", trees.len())));
        }
        for (tree, setting) in trees.iter().zip(Setting::ALL) {
            if tree.schema().labels() != setting.labels().as_slice() {
                return Err(Error::usage(format!(
                    "tree for {setting} has label domain {:?}",
                    tree.schema().labels()
                )));
            }
            if tree.schema().attributes() != trees[0].schema().attributes() {
                return Err(Error::usage("trees disagree on attributes"));
            }
        }
        Ok(Self { trees })
    }

    pub fn tree(&self, setting: Setting) -> &DecisionTree<F> {
        &self.trees[setting as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Setting, &DecisionTree<F>)> {
        Setting::ALL.into_iter().zip(&self.trees)
    }
}

/// Classifies `row` with each per-setting tree.
pub fn decide_profile<F: Scalar>(trees: &ProfileTrees<F>, row: &[Value<F>]) -> Result<SettingsProfile> {
    let mut profile = SENTINEL_PROFILE;
    for (setting, tree) in trees.iter() {
        let (label, _) = tree.classify_label(row)?;
        profile = profile.with_label(setting, label)?;
    }
    Ok(profile)
}
