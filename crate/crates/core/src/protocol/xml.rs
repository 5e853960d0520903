//! Canonical XML documents. Builders emit UTF-8 with LF line endings and a
//! two-space indent; parsers accept any whitespace between elements but
//! otherwise hold documents to the closed schema.

use std::fmt::Write as _;

use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::Event;
use quick_xml::{Reader, XmlVersion};

use super::{ContextUpload, DocumentStatus, ProtocolError, SettingsDocument};
use crate::context::{is_valid_category, AttributeRow, TimeInstant};
use crate::settings::{Level, SettingsProfile, Switch};

const VERSION: &str = "1";
const SETTING_ELEMENTS: [&str; 6] = ["bluetooth", "gps", "wifi", "brightness", "ringvolume", "vibration"];
const CONTEXT_ELEMENTS: [&str; 6] = ["zone", "event", "callcount", "callcat", "battery", "crisis"];

fn switch_text(s: Switch) -> &'static str {
    if s.is_on() {
        "on"
    } else {
        "off"
    }
}

fn setting_values(p: &SettingsProfile) -> [String; 6] {
    [
        switch_text(p.bluetooth).to_string(),
        switch_text(p.gps).to_string(),
        switch_text(p.wifi).to_string(),
        p.brightness.percent().to_string(),
        p.ring_volume.percent().to_string(),
        switch_text(p.vibration).to_string(),
    ]
}

fn write_profile(out: &mut String, indent: &str, p: &SettingsProfile) {
    for (name, value) in SETTING_ELEMENTS.iter().zip(setting_values(p)) {
        let _ = writeln!(out, "{indent}<{name}>{value}</{name}>");
    }
}

pub fn build_settings_xml(doc: &SettingsDocument) -> Vec<u8> {
    let status = doc.status().as_str();
    let mut out = format!(
        "<cosmos version=\"{VERSION}\" seq=\"{}\" status=\"{status}\">\n  <settings>\n",
        doc.sequence()
    );
    write_profile(&mut out, "    ", doc.profile());
    out.push_str("  </settings>\n</cosmos>\n");
    out.into_bytes()
}

pub fn build_context_xml(upload: &ContextUpload) -> Vec<u8> {
    let row = upload.row();
    let mut out = format!(
        "<context version=\"{VERSION}\" client=\"{}\" at=\"{}\">\n",
        escape(upload.client_id()),
        upload.at().seconds()
    );
    let values = [
        escape(&row.zone_id).into_owned(),
        escape(&row.event_category).into_owned(),
        row.call_count.to_string(),
        escape(&row.last_call_category).into_owned(),
        row.battery_pct.to_string(),
        (if row.crisis { "yes" } else { "no" }).to_string(),
    ];
    for (name, value) in CONTEXT_ELEMENTS.iter().zip(values) {
        let _ = writeln!(out, "  <{name}>{value}</{name}>");
    }
    if let Some(observed) = upload.observed() {
        out.push_str("  <observed>\n");
        write_profile(&mut out, "    ", observed);
        out.push_str("  </observed>\n");
    }
    out.push_str("</context>\n");
    out.into_bytes()
}

/// Minimal element tree used to validate documents after tokenising.
#[derive(Debug, Default)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Element>,
    text: String,
}

impl Element {
    fn expect_name(&self, name: &str) -> Result<(), ProtocolError> {
        if self.name != name {
            return Err(ProtocolError::schema(format!(
                "expected <{name}>, found <{}>",
                self.name
            )));
        }
        Ok(())
    }

    /// Requires exactly the attributes `names` (in any order) and returns
    /// their values in `names` order.
    fn attributes<const N: usize>(&self, names: [&str; N]) -> Result<[&str; N], ProtocolError> {
        if let Some((k, _)) = self.attrs.iter().find(|(k, _)| !names.contains(&k.as_str())) {
            return Err(ProtocolError::schema(format!(
                "unexpected attribute {k:?} on <{}>",
                self.name
            )));
        }
        let mut out = [""; N];
        for (slot, name) in out.iter_mut().zip(names) {
            *slot = self
                .attrs
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| ProtocolError::schema(format!("<{}> lacks attribute {name:?}", self.name)))?;
        }
        Ok(out)
    }

    fn leaf_text(&self) -> Result<&str, ProtocolError> {
        if !self.children.is_empty() {
            return Err(ProtocolError::schema(format!(
                "<{}> must not contain elements",
                self.name
            )));
        }
        if !self.attrs.is_empty() {
            return Err(ProtocolError::schema(format!("<{}> takes no attributes", self.name)));
        }
        Ok(self.text.trim())
    }

    /// Children must be exactly `names`, in order.
    fn ordered_children<'a>(&'a self, names: &[&str]) -> Result<&'a [Element], ProtocolError> {
        let found: Vec<&str> = self.children.iter().map(|c| c.name.as_str()).collect();
        if found != names {
            return Err(ProtocolError::schema(format!(
                "<{}> must contain {:?} in order, found {:?}",
                self.name, names, found
            )));
        }
        Ok(&self.children)
    }
}

fn parse_tree(bytes: &[u8]) -> Result<Element, ProtocolError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ProtocolError::malformed(format!("not UTF-8: {e}")))?;
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;
    loop {
        let event = reader
            .read_event()
            .map_err(|e| ProtocolError::malformed(format!("at byte {}: {e}", reader.buffer_position())))?;
        match event {
            Event::Start(start) => {
                if root.is_some() {
                    return Err(ProtocolError::malformed("content after the root element"));
                }
                let name = start.name().into_inner().to_string();
                let mut attrs = Vec::new();
                for attr in start.attributes() {
                    let attr = attr.map_err(|e| ProtocolError::malformed(e.to_string()))?;
                    let key = attr.key.into_inner().to_string();
                    let value = attr
                        .normalized_value(XmlVersion::Implicit1_0)
                        .map_err(|e| ProtocolError::malformed(e.to_string()))?
                        .into_owned();
                    attrs.push((key, value));
                }
                stack.push(Element {
                    name,
                    attrs,
                    ..Element::default()
                });
            }
            Event::End(_) => {
                let done = stack
                    .pop()
                    .ok_or_else(|| ProtocolError::malformed("unbalanced end tag"))?;
                if !done.children.is_empty() && !done.text.trim().is_empty() {
                    return Err(ProtocolError::schema(format!(
                        "<{}> mixes text and elements",
                        done.name
                    )));
                }
                match stack.last_mut() {
                    Some(parent) => parent.children.push(done),
                    None => root = Some(done),
                }
            }
            Event::Text(t) => {
                let content = t.xml10_content();
                match stack.last_mut() {
                    Some(el) => el.text.push_str(&content),
                    None if content.trim().is_empty() => {}
                    None => return Err(ProtocolError::malformed("text outside the root element")),
                }
            }
            Event::GeneralRef(r) => {
                let el = stack
                    .last_mut()
                    .ok_or_else(|| ProtocolError::malformed("entity outside the root element"))?;
                let resolved = match r.resolve_char_ref() {
                    Ok(Some(c)) => c.to_string(),
                    Ok(None) => {
                        let name: &str = r.as_ref();
                        resolve_predefined_entity(name)
                            .ok_or_else(|| ProtocolError::malformed(format!("unknown entity &{name};")))?
                            .to_string()
                    }
                    Err(e) => return Err(ProtocolError::malformed(e.to_string())),
                };
                el.text.push_str(&resolved);
            }
            Event::Eof => break,
            Event::Empty(e) => {
                return Err(ProtocolError::schema(format!(
                    "empty element <{}/> not allowed",
                    e.name().into_inner()
                )))
            }
            _ => {
                return Err(ProtocolError::schema(
                    "declarations, comments and CDATA are not allowed",
                ))
            }
        }
    }
    if !stack.is_empty() {
        return Err(ProtocolError::malformed("unexpected end of document"));
    }
    root.ok_or_else(|| ProtocolError::malformed("no root element"))
}

/// Digits only, no sign, no leading zeros.
fn canonical_uint<T: std::str::FromStr>(text: &str, what: &str) -> Result<T, ProtocolError> {
    let canonical =
        !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) && (text == "0" || !text.starts_with('0'));
    if !canonical {
        return Err(ProtocolError::value(format!(
            "{what}: {text:?} is not a canonical integer"
        )));
    }
    text.parse()
        .map_err(|_| ProtocolError::value(format!("{what}: {text:?} out of range")))
}

fn parse_switch(text: &str, what: &str) -> Result<Switch, ProtocolError> {
    match text {
        "on" => Ok(Switch::On),
        "off" => Ok(Switch::Off),
        _ => Err(ProtocolError::value(format!("{what}: expected on/off, got {text:?}"))),
    }
}

fn parse_level(text: &str, what: &str) -> Result<Level, ProtocolError> {
    canonical_uint::<u32>(text, what)
        .ok()
        .and_then(Level::from_percent)
        .ok_or_else(|| ProtocolError::value(format!("{what}: {text:?} is not one of 0/25/50/75/100")))
}

fn parse_profile(el: &Element) -> Result<SettingsProfile, ProtocolError> {
    if !el.attrs.is_empty() {
        return Err(ProtocolError::schema(format!("<{}> takes no attributes", el.name)));
    }
    let children = el.ordered_children(&SETTING_ELEMENTS)?;
    let mut texts = [""; 6];
    for (slot, child) in texts.iter_mut().zip(children) {
        *slot = child.leaf_text()?;
    }
    Ok(SettingsProfile {
        bluetooth: parse_switch(texts[0], "bluetooth")?,
        gps: parse_switch(texts[1], "gps")?,
        wifi: parse_switch(texts[2], "wifi")?,
        brightness: parse_level(texts[3], "brightness")?,
        ring_volume: parse_level(texts[4], "ringvolume")?,
        vibration: parse_switch(texts[5], "vibration")?,
    })
}

fn check_version(v: &str) -> Result<(), ProtocolError> {
    if v != VERSION {
        return Err(ProtocolError::value(format!("unsupported version {v:?}")));
    }
    Ok(())
}

pub fn parse_settings_xml(bytes: &[u8]) -> Result<SettingsDocument, ProtocolError> {
    let root = parse_tree(bytes)?;
    root.expect_name("cosmos")?;
    let [version, seq, status] = root.attributes(["version", "seq", "status"])?;
    let children = root.ordered_children(&["settings"])?;
    let profile = parse_profile(&children[0])?;
    check_version(version)?;
    let sequence = canonical_uint::<u64>(seq, "seq")?;
    let status = match status {
        "trained" => DocumentStatus::Trained,
        "training" => DocumentStatus::Training,
        other => return Err(ProtocolError::value(format!("unknown status {other:?}"))),
    };
    SettingsDocument::from_parts(profile, status, sequence)
}

fn parse_category(text: &str, what: &str) -> Result<String, ProtocolError> {
    if !is_valid_category(text) {
        return Err(ProtocolError::value(format!("{what}: invalid category {text:?}")));
    }
    Ok(text.to_string())
}

pub fn parse_context_xml(bytes: &[u8]) -> Result<ContextUpload, ProtocolError> {
    let root = parse_tree(bytes)?;
    root.expect_name("context")?;
    let [version, client, at] = root.attributes(["version", "client", "at"])?;
    let names: Vec<&str> = root.children.iter().map(|c| c.name.as_str()).collect();
    let with_observed = names.len() == CONTEXT_ELEMENTS.len() + 1;
    let mut expected = CONTEXT_ELEMENTS.to_vec();
    if with_observed {
        expected.push("observed");
    }
    let children = root.ordered_children(&expected)?;
    let mut texts = [""; 6];
    for (slot, child) in texts.iter_mut().zip(children) {
        *slot = child.leaf_text()?;
    }
    let observed = if with_observed {
        Some(parse_profile(&children[6])?)
    } else {
        None
    };
    check_version(version)?;
    if !super::is_valid_client_id(client) {
        return Err(ProtocolError::value(format!("invalid client id {client:?}")));
    }
    let at = TimeInstant(canonical_uint::<u64>(at, "at")?);
    let battery_pct: f64 = texts[4]
        .parse()
        .ok()
        .filter(|b: &f64| b.is_finite() && (0.0..=100.0).contains(b) && b.to_string() == texts[4])
        .ok_or_else(|| ProtocolError::value(format!("battery: {:?} is not a level in [0, 100]", texts[4])))?;
    let crisis = match texts[5] {
        "yes" => true,
        "no" => false,
        other => return Err(ProtocolError::value(format!("crisis: expected yes/no, got {other:?}"))),
    };
    let row = AttributeRow {
        zone_id: parse_category(texts[0], "zone")?,
        event_category: parse_category(texts[1], "event")?,
        call_count: canonical_uint::<u32>(texts[2], "callcount")?,
        last_call_category: parse_category(texts[3], "callcat")?,
        battery_pct,
        crisis,
    };
    Ok(ContextUpload {
        row,
        observed,
        client_id: client.to_string(),
        at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ProtocolErrorKind;
    use crate::settings::SENTINEL_PROFILE;

    const GOLDEN: &str = "<cosmos version=\"1\" seq=\"7\" status=\"trained\">
  <settings>
    <bluetooth>on</bluetooth>
    <gps>off</gps>
    <wifi>on</wifi>
    <brightness>50</brightness>
    <ringvolume>25</ringvolume>
    <vibration>on</vibration>
  </settings>
</cosmos>
";

    fn golden_doc() -> SettingsDocument {
        SettingsDocument::trained(SettingsProfile::from_compact("1,0,1,50,25,1").unwrap(), 7)
    }

    fn kind(r: Result<impl std::fmt::Debug, ProtocolError>) -> ProtocolErrorKind {
        r.unwrap_err().kind
    }

    #[test]
    fn settings_golden_bytes() {
        assert_eq!(build_settings_xml(&golden_doc()), GOLDEN.as_bytes());
        assert_eq!(parse_settings_xml(GOLDEN.as_bytes()).unwrap(), golden_doc());
    }

    #[test]
    fn settings_whitespace_variation_accepted() {
        let squashed = GOLDEN.replace("\n", "").replace("  ", "");
        assert_eq!(parse_settings_xml(squashed.as_bytes()).unwrap(), golden_doc());
        let spaced = GOLDEN.replace("<gps>off</gps>", "<gps>\n\t off  </gps>");
        assert_eq!(parse_settings_xml(spaced.as_bytes()).unwrap(), golden_doc());
        let reordered = GOLDEN.replace(
            "version=\"1\" seq=\"7\" status=\"trained\"",
            "status=\"trained\"  version=\"1\" seq=\"7\"",
        );
        assert_eq!(parse_settings_xml(reordered.as_bytes()).unwrap(), golden_doc());
    }

    #[test]
    fn settings_rejections() {
        let bad = GOLDEN.replace("<brightness>50</brightness>", "<brightness>30</brightness>");
        assert_eq!(kind(parse_settings_xml(bad.as_bytes())), ProtocolErrorKind::ValueError);
        let swapped = GOLDEN
            .replace("<gps>off</gps>", "<tmp/>")
            .replace("<wifi>on</wifi>", "<gps>off</gps>")
            .replace("<tmp/>", "<wifi>on</wifi>");
        assert_eq!(
            kind(parse_settings_xml(swapped.as_bytes())),
            ProtocolErrorKind::SchemaViolation
        );
        let missing = GOLDEN.replace("    <vibration>on</vibration>\n", "");
        assert_eq!(
            kind(parse_settings_xml(missing.as_bytes())),
            ProtocolErrorKind::SchemaViolation
        );
        let extra = GOLDEN.replace("<settings>", "<settings>\n<nfc>on</nfc>");
        assert_eq!(
            kind(parse_settings_xml(extra.as_bytes())),
            ProtocolErrorKind::SchemaViolation
        );
        let attr = GOLDEN.replace("status=\"trained\"", "status=\"trained\" x=\"1\"");
        assert_eq!(
            kind(parse_settings_xml(attr.as_bytes())),
            ProtocolErrorKind::SchemaViolation
        );
        let truncated = &GOLDEN[..GOLDEN.len() - 12];
        assert_eq!(
            kind(parse_settings_xml(truncated.as_bytes())),
            ProtocolErrorKind::Malformed
        );
        assert_eq!(kind(parse_settings_xml(b"not xml <<")), ProtocolErrorKind::Malformed);
        assert_eq!(kind(parse_settings_xml(b"")), ProtocolErrorKind::Malformed);
        let seq = GOLDEN.replace("seq=\"7\"", "seq=\"07\"");
        assert_eq!(kind(parse_settings_xml(seq.as_bytes())), ProtocolErrorKind::ValueError);
        let on = GOLDEN.replace("<gps>off</gps>", "<gps>OFF</gps>");
        assert_eq!(kind(parse_settings_xml(on.as_bytes())), ProtocolErrorKind::ValueError);
        let decl = format!("<?xml version=\"1.0\"?>\n{GOLDEN}");
        assert_eq!(
            kind(parse_settings_xml(decl.as_bytes())),
            ProtocolErrorKind::SchemaViolation
        );
        let two_roots = format!("{GOLDEN}{GOLDEN}");
        assert_eq!(
            kind(parse_settings_xml(two_roots.as_bytes())),
            ProtocolErrorKind::Malformed
        );
    }

    #[test]
    fn training_document_must_carry_sentinel() {
        let doc = SettingsDocument::training(3);
        assert_eq!(doc.profile(), &SENTINEL_PROFILE);
        let xml = String::from_utf8(build_settings_xml(&doc)).unwrap();
        assert_eq!(parse_settings_xml(xml.as_bytes()).unwrap(), doc);
        let tampered = xml.replace("<ringvolume>50</ringvolume>", "<ringvolume>0</ringvolume>");
        assert_eq!(
            kind(parse_settings_xml(tampered.as_bytes())),
            ProtocolErrorKind::ValueError
        );
    }

    fn upload(observed: Option<SettingsProfile>) -> ContextUpload {
        let row = AttributeRow {
            zone_id: "R&D <lab>".into(),
            event_category: "MEETING".into(),
            call_count: 2,
            last_call_category: "WORK".into(),
            battery_pct: 42.125,
            crisis: false,
        };
        ContextUpload::new(row, observed, "phone-\"1\"", TimeInstant(1_700_000_000)).unwrap()
    }

    #[test]
    fn context_round_trip_and_escaping() {
        let u = upload(Some(SENTINEL_PROFILE));
        let bytes = build_context_xml(&u);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("<context version=\"1\" client=\"phone-&quot;1&quot;\" at=\"1700000000\">\n"));
        assert!(text.contains("  <zone>R&amp;D &lt;lab&gt;</zone>\n"));
        assert!(text.contains("  <observed>\n    <bluetooth>off</bluetooth>\n"));
        assert_eq!(parse_context_xml(&bytes).unwrap(), u);
        let bare = upload(None);
        let bytes = build_context_xml(&bare);
        assert!(!String::from_utf8_lossy(&bytes).contains("<observed>"));
        assert_eq!(parse_context_xml(&bytes).unwrap().observed(), None);
    }

    #[test]
    fn context_rejections() {
        let text = String::from_utf8(build_context_xml(&upload(None))).unwrap();
        let missing = text.replace("  <callcount>2</callcount>\n", "");
        assert_eq!(
            kind(parse_context_xml(missing.as_bytes())),
            ProtocolErrorKind::SchemaViolation
        );
        let battery = text.replace("42.125", "142");
        assert_eq!(
            kind(parse_context_xml(battery.as_bytes())),
            ProtocolErrorKind::ValueError
        );
        let battery = text.replace("42.125", "42.1250");
        assert_eq!(
            kind(parse_context_xml(battery.as_bytes())),
            ProtocolErrorKind::ValueError
        );
        let crisis = text.replace("<crisis>no</crisis>", "<crisis>maybe</crisis>");
        assert_eq!(
            kind(parse_context_xml(crisis.as_bytes())),
            ProtocolErrorKind::ValueError
        );
        let client = text.replace("client=\"phone-&quot;1&quot;\"", "client=\"\"");
        assert_eq!(
            kind(parse_context_xml(client.as_bytes())),
            ProtocolErrorKind::ValueError
        );
        let zone = text.replace("<zone>R&amp;D &lt;lab&gt;</zone>", "<zone>a,b</zone>");
        assert_eq!(kind(parse_context_xml(zone.as_bytes())), ProtocolErrorKind::ValueError);
        let nested = text.replace("<event>MEETING</event>", "<event><x>1</x></event>");
        assert_eq!(
            kind(parse_context_xml(nested.as_bytes())),
            ProtocolErrorKind::SchemaViolation
        );
        assert_eq!(
            kind(parse_context_xml(GOLDEN.as_bytes())),
            ProtocolErrorKind::SchemaViolation
        );
    }
}
