//! Append-only store of labelled observations, optionally backed by a file.
//!
//! File format: a `#` header line, then one record per line,
//! `seq;at;zone,event,callcount,callcat,battery,crisis|B,P,W,Y,R,V`, with the
//! attribute part in dataset CSV form and the six labels in label form.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::context::{is_valid_category, AttributeRow, TimeInstant};
use crate::error::{Error, Result};
use crate::settings::{Setting, SettingsProfile, SENTINEL_PROFILE};

const HEADER: &str = "# cosmos-store v1 seq;at;zone,event,callcount,callcat,battery,crisis|bluetooth,gps,wifi,brightness,ring_volume,vibration";

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub seq: u64,
    pub at: TimeInstant,
    pub row: AttributeRow,
    pub label: SettingsProfile,
}

impl Observation {
    fn to_line(&self) -> String {
        let r = &self.row;
        let labels: Vec<&str> = Setting::ALL.iter().map(|&s| self.label.label(s)).collect();
        format!(
            "{};{};{},{},{},{},{},{}|{}",
            self.seq,
            self.at.seconds(),
            r.zone_id,
            r.event_category,
            r.call_count,
            r.last_call_category,
            r.battery_pct,
            if r.crisis { "YES" } else { "NO" },
            labels.join(",")
        )
    }

    fn parse_line(line: &str) -> std::result::Result<Self, String> {
        let mut parts = line.splitn(3, ';');
        let seq = parts.next().unwrap_or("");
        let at = parts.next().ok_or("missing time field")?;
        let rest = parts.next().ok_or("missing record body")?;
        let (attrs, labels) = rest.rsplit_once('|').ok_or("missing `|` before labels")?;
        let a: Vec<&str> = attrs.split(',').collect();
        if a.len() != 6 {
            return Err(format!("expected 6 attribute fields, got {}", a.len()));
        }
        let category = |s: &str| {
            if is_valid_category(s) {
                Ok(s.to_string())
            } else {
                Err(format!("invalid category {s:?}"))
            }
        };
        let row = AttributeRow {
            zone_id: category(a[0])?,
            event_category: category(a[1])?,
            call_count: a[2].parse().map_err(|_| format!("bad call count {:?}", a[2]))?,
            last_call_category: category(a[3])?,
            battery_pct: a[4].parse().map_err(|_| format!("bad battery {:?}", a[4]))?,
            crisis: match a[5] {
                "YES" => true,
                "NO" => false,
                other => return Err(format!("bad crisis flag {other:?}")),
            },
        };
        row.validate().map_err(|e| e.to_string())?;
        let l: Vec<&str> = labels.split(',').collect();
        if l.len() != 6 {
            return Err(format!("expected 6 labels, got {}", l.len()));
        }
        let mut label = SENTINEL_PROFILE;
        for (setting, value) in Setting::ALL.into_iter().zip(l) {
            label = label.with_label(setting, value).map_err(|e| e.to_string())?;
        }
        Ok(Self {
            seq: seq.parse().map_err(|_| format!("bad sequence id {seq:?}"))?,
            at: TimeInstant(at.parse().map_err(|_| format!("bad time {at:?}"))?),
            row,
            label,
        })
    }
}

#[derive(Debug, Default)]
pub struct ObservationStore {
    observations: Vec<Observation>,
    sink: Option<File>,
}

impl ObservationStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) a store file, loading any existing records.
    pub fn open(path: &Path) -> Result<Self> {
        let source = path.display().to_string();
        let mut observations: Vec<Observation> = Vec::new();
        let exists = path.exists();
        if exists {
            let reader = BufReader::new(File::open(path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let obs = Observation::parse_line(line).map_err(|msg| Error::parse(&source, i + 1, msg))?;
                if observations.last().is_some_and(|last| obs.seq <= last.seq) {
                    return Err(Error::parse(&source, i + 1, "sequence ids must increase"));
                }
                observations.push(obs);
            }
        }
        let mut sink = OpenOptions::new().create(true).append(true).open(path)?;
        if !exists || sink.metadata()?.len() == 0 {
            writeln!(sink, "{HEADER}")?;
            sink.flush()?;
        }
        Ok(Self {
            observations,
            sink: Some(sink),
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn latest_seq(&self) -> u64 {
        self.observations.last().map_or(0, |o| o.seq)
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Appends one labelled observation and returns its sequence id. The
    /// record is flushed to the backing file before returning.
    pub fn append(&mut self, row: AttributeRow, label: SettingsProfile, at: TimeInstant) -> Result<u64> {
        row.validate()?;
        let obs = Observation {
            seq: self.latest_seq() + 1,
            at,
            row,
            label,
        };
        if let Some(sink) = self.sink.as_mut() {
            writeln!(sink, "{}", obs.to_line())?;
            sink.flush()?;
        }
        let seq = obs.seq;
        self.observations.push(obs);
        Ok(seq)
    }
}
