//! Encoding of context rows for the per-setting classifiers.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::context::{AttributeRow, NONE, UNKNOWN_ZONE};
use crate::dtree::{Attribute, AttributeSchema, Dataset, Instance, Value};
use crate::error::Result;
use crate::settings::{Setting, SettingsProfile};

pub const ATTRIBUTE_NAMES: [&str; 6] = ["zone", "event", "callcount", "callcat", "battery", "crisis"];
const CRISIS_VALUES: [&str; 2] = ["NO", "YES"];

/// Attribute list fitted to a set of training rows. Categorical value sets are
/// the observed values plus the sentinel; values never seen in training encode
/// as missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextEncoder {
    attributes: Vec<Attribute>,
}

impl ContextEncoder {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a AttributeRow>) -> Self {
        let mut zones: BTreeSet<String> = BTreeSet::from([UNKNOWN_ZONE.to_string()]);
        let mut events: BTreeSet<String> = BTreeSet::from([NONE.to_string()]);
        let mut callcats: BTreeSet<String> = BTreeSet::from([NONE.to_string()]);
        for r in rows {
            zones.insert(r.zone_id.clone());
            events.insert(r.event_category.clone());
            callcats.insert(r.last_call_category.clone());
        }
        Self {
            attributes: vec![
                Attribute::categorical(ATTRIBUTE_NAMES[0], zones),
                Attribute::categorical(ATTRIBUTE_NAMES[1], events),
                Attribute::continuous(ATTRIBUTE_NAMES[2]),
                Attribute::categorical(ATTRIBUTE_NAMES[3], callcats),
                Attribute::continuous(ATTRIBUTE_NAMES[4]),
                Attribute::categorical(ATTRIBUTE_NAMES[5], CRISIS_VALUES),
            ],
        }
    }

    pub fn schema(&self, setting: Setting) -> Result<AttributeSchema> {
        AttributeSchema::new(self.attributes.clone(), setting.name(), setting.labels())
    }

    pub fn encode(&self, row: &AttributeRow) -> Vec<Value<f64>> {
        let cat = |i: usize, v: &str| {
            self.attributes[i]
                .value_index(v)
                .map_or(Value::Missing, Value::Categorical)
        };
        vec![
            cat(0, &row.zone_id),
            cat(1, &row.event_category),
            Value::Continuous(f64::from(row.call_count)),
            cat(3, &row.last_call_category),
            Value::Continuous(row.battery_pct),
            cat(5, CRISIS_VALUES[usize::from(row.crisis)]),
        ]
    }

    pub fn dataset<'a>(
        &self,
        setting: Setting,
        rows: impl IntoIterator<Item = (&'a AttributeRow, &'a SettingsProfile)>,
    ) -> Result<Dataset<f64>> {
        let instances = rows
            .into_iter()
            .map(|(row, label)| Instance {
                values: self.encode(row),
                label: label.label_index(setting),
            })
            .collect();
        Dataset::new(self.schema(setting)?, instances)
    }
}
