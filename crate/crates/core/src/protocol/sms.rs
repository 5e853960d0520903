//! Single-message SMS encoding of a settings document:
//! `COSMOS1;S=<T|G>;Q=<seq>;B<0|1>;P<0|1>;W<0|1>;Y<level>;R<level>;V<0|1>`.

use super::{DocumentStatus, ProtocolError, SettingsDocument};
use crate::settings::{Level, SettingsProfile, Switch};

const PREFIX: &str = "COSMOS1;";
pub const SMS_MAX_LEN: usize = 160;

fn bit(s: Switch) -> char {
    if s.is_on() {
        '1'
    } else {
        '0'
    }
}

pub fn encode_sms(doc: &SettingsDocument) -> String {
    let p = doc.profile();
    let status = match doc.status() {
        DocumentStatus::Trained => 'T',
        DocumentStatus::Training => 'G',
    };
    format!(
        "{PREFIX}S={status};Q={};B{};P{};W{};Y{};R{};V{}",
        doc.sequence(),
        bit(p.bluetooth),
        bit(p.gps),
        bit(p.wifi),
        p.brightness.percent(),
        p.ring_volume.percent(),
        bit(p.vibration)
    )
}

fn field<'a>(fields: &[&'a str], i: usize, key: &str) -> Result<&'a str, ProtocolError> {
    fields[i]
        .strip_prefix(key)
        .ok_or_else(|| ProtocolError::malformed(format!("field {} must start with {key:?}", i + 1)))
}

fn switch(text: &str, key: &str) -> Result<Switch, ProtocolError> {
    match text {
        "1" => Ok(Switch::On),
        "0" => Ok(Switch::Off),
        _ => Err(ProtocolError::value(format!("{key}: expected 0 or 1, got {text:?}"))),
    }
}

fn level(text: &str, key: &str) -> Result<Level, ProtocolError> {
    Level::ALL
        .into_iter()
        .find(|l| l.label() == text)
        .ok_or_else(|| ProtocolError::value(format!("{key}: {text:?} is not one of 0/25/50/75/100")))
}

pub fn decode_sms(text: &str) -> Result<SettingsDocument, ProtocolError> {
    if text.len() > SMS_MAX_LEN {
        return Err(ProtocolError::malformed(format!(
            "message longer than {SMS_MAX_LEN} characters"
        )));
    }
    let body = text
        .strip_prefix(PREFIX)
        .ok_or_else(|| ProtocolError::malformed("missing COSMOS1; prefix"))?;
    let fields: Vec<&str> = body.split(';').collect();
    if fields.len() != 8 {
        return Err(ProtocolError::malformed(format!(
            "expected 8 fields, got {}",
            fields.len()
        )));
    }
    let keys = ["S=", "Q=", "B", "P", "W", "Y", "R", "V"];
    let mut values = [""; 8];
    for (i, key) in keys.iter().enumerate() {
        values[i] = field(&fields, i, key)?;
    }
    let status = match values[0] {
        "T" => DocumentStatus::Trained,
        "G" => DocumentStatus::Training,
        other => return Err(ProtocolError::value(format!("S: unknown status {other:?}"))),
    };
    let q = values[1];
    let canonical = !q.is_empty() && q.bytes().all(|b| b.is_ascii_digit()) && (q == "0" || !q.starts_with('0'));
    let sequence = q
        .parse::<u64>()
        .ok()
        .filter(|_| canonical)
        .ok_or_else(|| ProtocolError::value(format!("Q: {q:?} is not a canonical sequence number")))?;
    let profile = SettingsProfile {
        bluetooth: switch(values[2], "B")?,
        gps: switch(values[3], "P")?,
        wifi: switch(values[4], "W")?,
        brightness: level(values[5], "Y")?,
        ring_volume: level(values[6], "R")?,
        vibration: switch(values[7], "V")?,
    };
    SettingsDocument::from_parts(profile, status, sequence)
}
