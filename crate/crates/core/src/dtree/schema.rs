use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

pub(crate) const MISSING: &str = "?";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeKind {
    /// Declared value set, in branch order.
    Categorical(Vec<String>),
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn categorical<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical(values.into_iter().map(Into::into).collect()),
        }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Continuous,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, AttributeKind::Continuous)
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        match &self.kind {
            AttributeKind::Categorical(values) => values.iter().position(|v| v == value),
            AttributeKind::Continuous => None,
        }
    }
}

/// One attribute value in a row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub enum Value<F> {
    /// Index into the attribute's declared value set.
    Categorical(usize),
    Continuous(F),
    Missing,
}

/// Ordered attributes plus the class label domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
    label_name: String,
    labels: Vec<String>,
}

impl AttributeSchema {
    pub fn new<S: Into<String>>(
        attributes: Vec<Attribute>,
        label_name: impl Into<String>,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let label_name = label_name.into();
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut names = HashSet::new();
        for a in &attributes {
            check_token(&a.name, "attribute name")?;
            if !names.insert(a.name.as_str()) {
                return Err(Error::usage(format!("duplicate attribute name {:?}", a.name)));
            }
            if let AttributeKind::Categorical(values) = &a.kind {
                check_value_set(values, &a.name)?;
            }
        }
        check_token(&label_name, "label name")?;
        if names.contains(label_name.as_str()) {
            return Err(Error::usage(format!(
                "label name {label_name:?} clashes with an attribute"
            )));
        }
        check_value_set(&labels, &label_name)?;
        Ok(Self {
            attributes,
            label_name,
            labels,
        })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, index: usize) -> Option<&Attribute> {
        self.attributes.get(index)
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Number of branches a split on `attribute` produces.
    pub(crate) fn arity(&self, attribute: usize) -> usize {
        match &self.attributes[attribute].kind {
            AttributeKind::Categorical(values) => values.len(),
            AttributeKind::Continuous => 2,
        }
    }

    pub fn check_row<F: Scalar>(&self, row: &[Value<F>]) -> Result<()> {
        if row.len() != self.attributes.len() {
            return Err(Error::usage(format!(
                "row has {} values, schema has {} attributes",
                row.len(),
                self.attributes.len()
            )));
        }
        for (a, v) in self.attributes.iter().zip(row) {
            match (&a.kind, v) {
                (_, Value::Missing) => {}
                (AttributeKind::Categorical(values), Value::Categorical(i)) if *i < values.len() => {}
                (AttributeKind::Continuous, Value::Continuous(x)) if x.is_finite() => {}
                _ => {
                    return Err(Error::usage(format!(
                        "value {v:?} does not conform to attribute {:?}",
                        a.name
                    )))
                }
            }
        }
        Ok(())
    }

    /// Header line: `name:kind[,...]|label:CAT(v1;v2;...)`.
    pub fn header(&self) -> String {
        let attrs: Vec<String> = self
            .attributes
            .iter()
            .map(|a| match &a.kind {
                AttributeKind::Categorical(values) => format!("{}:CAT({})", a.name, values.join(";")),
                AttributeKind::Continuous => format!("{}:CONT", a.name),
            })
            .collect();
        format!("{}|{}:CAT({})", attrs.join(","), self.label_name, self.labels.join(";"))
    }

    pub fn parse_header(line: &str) -> Result<Self> {
        let (attrs, label) = line
            .split_once('|')
            .ok_or_else(|| Error::usage("header lacks the `|label:CAT(...)` part"))?;
        let mut attributes = Vec::new();
        if !attrs.trim().is_empty() {
            for spec in split_top_level(attrs) {
                attributes.push(parse_attribute_spec(spec)?);
            }
        }
        let label = parse_attribute_spec(label)?;
        match label.kind {
            AttributeKind::Categorical(values) => Self::new(attributes, label.name, values),
            AttributeKind::Continuous => Err(Error::usage("label must be categorical")),
        }
    }

    /// Parses the attribute fields of one CSV row; `?` marks a missing value.
    pub fn parse_values<F: Scalar>(&self, fields: &[&str]) -> Result<Vec<Value<F>>> {
        if fields.len() != self.attributes.len() {
            return Err(Error::usage(format!(
                "expected {} attribute values, got {}",
                self.attributes.len(),
                fields.len()
            )));
        }
        self.attributes
            .iter()
            .zip(fields)
            .map(|(a, raw)| {
                let raw = raw.trim();
                if raw == MISSING {
                    return Ok(Value::Missing);
                }
                match &a.kind {
                    AttributeKind::Categorical(_) => a
                        .value_index(raw)
                        .map(Value::Categorical)
                        .ok_or_else(|| Error::usage(format!("{raw:?} is not a declared value of {:?}", a.name))),
                    AttributeKind::Continuous => match raw.parse::<F>() {
                        Ok(x) if x.is_finite() => Ok(Value::Continuous(x)),
                        _ => Err(Error::usage(format!("{raw:?} is not a finite number for {:?}", a.name))),
                    },
                }
            })
            .collect()
    }

    pub fn format_values<F: Scalar>(&self, row: &[Value<F>]) -> String {
        let fields: Vec<String> = self
            .attributes
            .iter()
            .zip(row)
            .map(|(a, v)| match (v, &a.kind) {
                (Value::Categorical(i), AttributeKind::Categorical(values)) => values[*i].clone(),
                (Value::Continuous(x), _) => x.to_string(),
                _ => MISSING.to_string(),
            })
            .collect();
        fields.join(",")
    }
}

fn check_token(s: &str, what: &str) -> Result<()> {
    let bad = |c: char| matches!(c, ',' | ';' | ':' | '|' | '(' | ')') || c.is_whitespace() || c.is_control();
    if s.is_empty() || s.chars().any(bad) {
        return Err(Error::usage(format!("invalid {what} {s:?}")));
    }
    Ok(())
}

fn check_value_set(values: &[String], name: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::usage(format!("{name:?}: value set must be non-empty")));
    }
    let mut seen = HashSet::new();
    for v in values {
        if v.is_empty() || v == MISSING || v.contains([',', ';', ')', '(', '|']) || v.trim() != v {
            return Err(Error::usage(format!("{name:?}: invalid value {v:?}")));
        }
        if !seen.insert(v) {
            return Err(Error::usage(format!("{name:?}: duplicate value {v:?}")));
        }
    }
    Ok(())
}

/// Splits on commas outside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn parse_attribute_spec(spec: &str) -> Result<Attribute> {
    let spec = spec.trim();
    let (name, kind) = spec
        .split_once(':')
        .ok_or_else(|| Error::usage(format!("attribute spec {spec:?} lacks `:kind`")))?;
    let name = name.trim();
    let kind = kind.trim();
    if kind == "CONT" {
        return Ok(Attribute::continuous(name));
    }
    let inner = kind
        .strip_prefix("CAT(")
        .and_then(|k| k.strip_suffix(')'))
        .ok_or_else(|| Error::usage(format!("unknown attribute kind {kind:?}")))?;
    Ok(Attribute::categorical(name, inner.split(';').map(str::trim)))
}

/// A labelled row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Instance<F> {
    pub values: Vec<Value<F>>,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Dataset<F> {
    schema: AttributeSchema,
    rows: Vec<Instance<F>>,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(schema: AttributeSchema, rows: Vec<Instance<F>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            schema
                .check_row(&row.values)
                .map_err(|e| Error::usage(format!("row {i}: {e}")))?;
            if row.label >= schema.labels.len() {
                return Err(Error::usage(format!("row {i}: label index {} out of range", row.label)));
            }
        }
        Ok(Self { schema, rows })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Instance<F>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reads the dataset file format: a header line followed by one CSV row per
    /// instance with the label last. Blank lines and `#` lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::usage("dataset file is empty"))?;
        let schema =
            AttributeSchema::parse_header(header).map_err(|e| Error::parse("dataset", hline + 1, e.to_string()))?;
        let mut rows = Vec::new();
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            let Some((label, values)) = fields.split_last() else {
                continue;
            };
            let values = schema
                .parse_values(values)
                .map_err(|e| Error::parse("dataset", i + 1, e.to_string()))?;
            let label = schema
                .label_index(label.trim())
                .ok_or_else(|| Error::parse("dataset", i + 1, format!("unknown label {:?}", label.trim())))?;
            rows.push(Instance { values, label });
        }
        Self::new(schema, rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = self.schema.header();
        out.push('\n');
        for row in &self.rows {
            out.push_str(&self.schema.format_values(&row.values));
            out.push(',');
            out.push_str(&self.schema.labels[row.label]);
            out.push('\n');
        }
        out
    }
}
