use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{is_valid_category, LocationReading, Position, UNKNOWN_ZONE};
use crate::error::{Error, Result};

const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A named circular region, optionally also identified by WiFi access points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub center_lat: f64,
    pub center_lon: f64,
    pub radius_m: f64,
    pub wifi_ids: BTreeSet<String>,
}

impl Zone {
    /// Planar (equirectangular) distance from the zone center, in meters.
    pub fn distance_m(&self, latitude: f64, longitude: f64) -> f64 {
        let mean_lat = ((latitude + self.center_lat) / 2.0).to_radians();
        let dx = (longitude - self.center_lon).to_radians() * mean_lat.cos() * EARTH_RADIUS_M;
        let dy = (latitude - self.center_lat).to_radians() * EARTH_RADIUS_M;
        dx.hypot(dy)
    }
}

/// Validated zone table: unique non-empty ids, positive radii.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ZoneTable {
    zones: Vec<Zone>,
}

impl ZoneTable {
    pub fn new(zones: Vec<Zone>) -> Result<Self> {
        let mut seen = HashSet::new();
        for z in &zones {
            if !is_valid_category(&z.id) || z.id == UNKNOWN_ZONE {
                return Err(Error::domain(format!("invalid zone id {:?}", z.id)));
            }
            if !seen.insert(z.id.as_str()) {
                return Err(Error::domain(format!("duplicate zone id {:?}", z.id)));
            }
            if !z.radius_m.is_finite() || z.radius_m <= 0.0 {
                return Err(Error::domain(format!("zone {:?}: radius must be > 0", z.id)));
            }
            if !(-90.0..=90.0).contains(&z.center_lat) || !(-180.0..=180.0).contains(&z.center_lon) {
                return Err(Error::domain(format!("zone {:?}: center out of range", z.id)));
            }
        }
        Ok(Self { zones })
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.zones.iter().map(|z| z.id.as_str())
    }

    /// Serialises back to the line format read by [`parse_zone_table`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for z in &self.zones {
            out.push_str(&zone_line(z));
            out.push('\n');
        }
        out
    }
}

pub(crate) fn zone_line(z: &Zone) -> String {
    let mut line = format!("{},{},{},{}", z.id, z.center_lat, z.center_lon, z.radius_m);
    if !z.wifi_ids.is_empty() {
        line.push(',');
        let ids: Vec<&str> = z.wifi_ids.iter().map(String::as_str).collect();
        let _ = write!(line, "{}", ids.join(";"));
    }
    line
}

/// Parses one `id,center_lat,center_lon,radius_m[,wifi;wifi...]` record.
pub(crate) fn parse_zone_line(line: &str) -> std::result::Result<Zone, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if !(4..=5).contains(&fields.len()) {
        return Err(format!("expected 4 or 5 comma-separated fields, got {}", fields.len()));
    }
    let num = |i: usize, name: &str| -> std::result::Result<f64, String> {
        fields[i]
            .parse::<f64>()
            .map_err(|_| format!("{name}: not a number: {:?}", fields[i]))
    };
    let wifi_ids = match fields.get(4) {
        Some(list) => list
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        None => BTreeSet::new(),
    };
    Ok(Zone {
        id: fields[0].to_string(),
        center_lat: num(1, "center_lat")?,
        center_lon: num(2, "center_lon")?,
        radius_m: num(3, "radius_m")?,
        wifi_ids,
    })
}

/// Reads a zone table: one zone per line, `#` starts a comment.
pub fn parse_zone_table(text: &str) -> Result<ZoneTable> {
    let mut zones = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let zone = parse_zone_line(line).map_err(|msg| Error::parse("zones", i + 1, msg))?;
        zones.push(zone);
    }
    ZoneTable::new(zones)
}

pub(crate) fn strip_comment(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

/// Zone id for a reading, or [`UNKNOWN_ZONE`].
///
/// GPS fixes pick the nearest zone whose radius contains the point; WiFi fixes
/// pick a zone listing the access point. Remaining ties go to the
/// lexicographically smallest id, so the result does not depend on table order.
pub fn resolve_zone(reading: &LocationReading, zones: &ZoneTable) -> String {
    let best = match reading.position() {
        Position::Gps { latitude, longitude } => zones
            .zones
            .iter()
            .map(|z| (z.distance_m(*latitude, *longitude), z))
            .filter(|(d, z)| *d <= z.radius_m)
            .min_by(|(da, a), (db, b)| da.total_cmp(db).then_with(|| a.id.cmp(&b.id)))
            .map(|(_, z)| z),
        Position::Wifi { access_point_id } => zones
            .zones
            .iter()
            .filter(|z| z.wifi_ids.contains(access_point_id))
            .min_by(|a, b| a.id.cmp(&b.id)),
    };
    best.map_or_else(|| UNKNOWN_ZONE.to_string(), |z| z.id.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::TimeInstant;

    fn zone(id: &str, lat: f64, lon: f64, r: f64) -> Zone {
        Zone {
            id: id.into(),
            center_lat: lat,
            center_lon: lon,
            radius_m: r,
            wifi_ids: BTreeSet::new(),
        }
    }

    fn gps(lat: f64, lon: f64) -> LocationReading {
        LocationReading::gps(lat, lon, 5.0, TimeInstant(0)).unwrap()
    }

    #[test]
    fn point_at_center_resolves() {
        let t = ZoneTable::new(vec![zone("home", 12.97, 77.59, 100.0)]).unwrap();
        assert_eq!(resolve_zone(&gps(12.97, 77.59), &t), "home");
        assert_eq!(resolve_zone(&gps(13.5, 77.59), &t), UNKNOWN_ZONE);
    }

    #[test]
    fn equidistant_tie_goes_to_smaller_id() {
        let b = zone("b", 0.001, 0.0, 500.0);
        let a = zone("a", -0.001, 0.0, 500.0);
        let t = ZoneTable::new(vec![b.clone(), a.clone()]).unwrap();
        assert_eq!(resolve_zone(&gps(0.0, 0.0), &t), "a");
        let t = ZoneTable::new(vec![a, b]).unwrap();
        assert_eq!(resolve_zone(&gps(0.0, 0.0), &t), "a");
    }

    #[test]
    fn nearest_containing_zone_wins() {
        let t = ZoneTable::new(vec![zone("big", 0.0, 0.0, 5000.0), zone("small", 0.01, 0.0, 2000.0)]).unwrap();
        assert_eq!(resolve_zone(&gps(0.009, 0.0), &t), "small");
        assert_eq!(resolve_zone(&gps(0.001, 0.0), &t), "big");
    }

    #[test]
    fn wifi_matches_access_point() {
        let text = "# id,lat,lon,r,wifi\noffice, 1.0, 2.0, 100, ap-1;ap-2\nhome,3,4,50\n";
        let t = parse_zone_table(text).unwrap();
        let r = LocationReading::wifi("ap-2", 30.0, TimeInstant(0)).unwrap();
        assert_eq!(resolve_zone(&r, &t), "office");
        let r = LocationReading::wifi("ap-9", 30.0, TimeInstant(0)).unwrap();
        assert_eq!(resolve_zone(&r, &t), UNKNOWN_ZONE);
        assert_eq!(parse_zone_table(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn table_validation() {
        assert!(ZoneTable::new(vec![zone("a", 0.0, 0.0, 0.0)]).is_err());
        assert!(ZoneTable::new(vec![zone("a", 0.0, 0.0, 1.0), zone("a", 1.0, 0.0, 1.0)]).is_err());
        assert!(ZoneTable::new(vec![zone("", 0.0, 0.0, 1.0)]).is_err());
        assert!(parse_zone_table("a,1,2").is_err());
        assert!(parse_zone_table("a,x,2,3").is_err());
    }
}
