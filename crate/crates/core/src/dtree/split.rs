//! Information measures and C4.5 split selection.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::schema::{AttributeKind, AttributeSchema, Dataset, Instance, Value};
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Shannon entropy in bits of a class-count vector.
pub fn entropy<F: Scalar>(counts: &[usize]) -> Result<F> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::domain("entropy of an all-zero distribution"));
    }
    Ok(entropy_nonempty(counts, total))
}

fn entropy_nonempty<F: Scalar>(counts: &[usize], total: usize) -> F {
    let n = F::from_count(total);
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = F::from_count(c) / n;
            -p * p.log2()
        })
        .fold(F::zero(), |acc, x| acc + x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct GainRatio<F> {
    pub info_gain: F,
    pub split_info: F,
    pub ratio: F,
}

impl<F: Scalar> GainRatio<F> {
    /// Gain ratio of a partition given per-branch class counts.
    pub(crate) fn from_branches(branches: &[Vec<usize>]) -> Self {
        let n_classes = branches.first().map_or(0, Vec::len);
        let mut parent = vec![0usize; n_classes];
        for b in branches {
            for (p, c) in parent.iter_mut().zip(b) {
                *p += c;
            }
        }
        let total: usize = parent.iter().sum();
        if total == 0 {
            return Self {
                info_gain: F::zero(),
                split_info: F::zero(),
                ratio: F::zero(),
            };
        }
        let n = F::from_count(total);
        let mut children = F::zero();
        let mut sizes = Vec::with_capacity(branches.len());
        for b in branches {
            let size: usize = b.iter().sum();
            sizes.push(size);
            if size > 0 {
                children = children + F::from_count(size) / n * entropy_nonempty::<F>(b, size);
            }
        }
        let info_gain = entropy_nonempty::<F>(&parent, total) - children;
        let split_info = entropy_nonempty::<F>(&sizes, total);
        let ratio = if split_info > F::zero() {
            info_gain / split_info
        } else {
            F::zero()
        };
        Self {
            info_gain,
            split_info,
            ratio,
        }
    }
}

/// A candidate test: a categorical attribute, or a continuous attribute with
/// a `<= threshold` / `> threshold` split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Split<F> {
    pub attribute: usize,
    pub threshold: Option<F>,
    pub gain: GainRatio<F>,
    /// Number of branches receiving at least one row.
    pub occupied_branches: usize,
}

/// Branch of a known value under a test, `None` for a missing value.
pub(crate) fn branch_of<F: Scalar>(value: &Value<F>, threshold: Option<F>) -> Option<usize> {
    match (value, threshold) {
        (Value::Categorical(i), _) => Some(*i),
        (Value::Continuous(x), Some(t)) => Some(usize::from(*x > t)),
        _ => None,
    }
}

/// Index of the largest count; ties go to the smaller index.
pub(crate) fn argmax(counts: impl IntoIterator<Item = usize>) -> usize {
    let mut best = (0, 0);
    for (i, c) in counts.into_iter().enumerate() {
        if c > best.1 {
            best = (i, c);
        }
    }
    best.0
}

/// Assigns every row to a branch. Rows missing the attribute join the branch
/// holding the most known rows.
pub(crate) fn route_rows<F: Scalar>(
    schema: &AttributeSchema,
    rows: &[&Instance<F>],
    attribute: usize,
    threshold: Option<F>,
) -> (Vec<usize>, usize) {
    let arity = schema.arity(attribute);
    let known: Vec<Option<usize>> = rows
        .iter()
        .map(|r| branch_of(&r.values[attribute], threshold))
        .collect();
    let mut sizes = vec![0usize; arity];
    for b in known.iter().flatten() {
        sizes[*b] += 1;
    }
    let majority = argmax(sizes.iter().copied());
    (known.into_iter().map(|b| b.unwrap_or(majority)).collect(), majority)
}

fn branch_counts<F: Scalar>(
    schema: &AttributeSchema,
    rows: &[&Instance<F>],
    attribute: usize,
    threshold: Option<F>,
) -> Vec<Vec<usize>> {
    let (assignment, _) = route_rows(schema, rows, attribute, threshold);
    let mut counts = vec![vec![0usize; schema.labels().len()]; schema.arity(attribute)];
    for (row, b) in rows.iter().zip(assignment) {
        counts[b][row.label] += 1;
    }
    counts
}

fn check_attribute<F: Scalar>(schema: &AttributeSchema, attribute: usize, threshold: Option<F>) -> Result<()> {
    let attr = schema
        .attribute(attribute)
        .ok_or_else(|| Error::usage(format!("attribute index {attribute} out of range")))?;
    match (&attr.kind, threshold) {
        (AttributeKind::Categorical(_), Some(_)) => Err(Error::usage(format!(
            "threshold given for categorical attribute {:?}",
            attr.name
        ))),
        (AttributeKind::Continuous, None) => Err(Error::usage(format!(
            "continuous attribute {:?} needs a threshold",
            attr.name
        ))),
        (AttributeKind::Continuous, Some(t)) if !t.is_finite() => Err(Error::usage("threshold must be finite")),
        _ => Ok(()),
    }
}

/// Information gain, split information and gain ratio of splitting `data` on
/// `attribute` (at `threshold`, for continuous attributes).
pub fn gain_ratio<F: Scalar>(data: &Dataset<F>, attribute: usize, threshold: Option<F>) -> Result<GainRatio<F>> {
    check_attribute(data.schema(), attribute, threshold)?;
    let rows: Vec<&Instance<F>> = data.rows().iter().collect();
    Ok(GainRatio::from_branches(&branch_counts(
        data.schema(),
        &rows,
        attribute,
        threshold,
    )))
}

/// Every candidate split of `rows`: each categorical attribute once, and each
/// midpoint between adjacent distinct values of each continuous attribute.
/// Attributes ascend by index, thresholds ascend within an attribute.
pub(crate) fn candidate_splits<F: Scalar>(schema: &AttributeSchema, rows: &[&Instance<F>]) -> Vec<Split<F>> {
    let n_labels = schema.labels().len();
    let mut out = Vec::new();
    for (attribute, attr) in schema.attributes().iter().enumerate() {
        match attr.kind {
            AttributeKind::Categorical(_) => {
                let counts = branch_counts(schema, rows, attribute, None);
                out.push(Split {
                    attribute,
                    threshold: None,
                    gain: GainRatio::from_branches(&counts),
                    occupied_branches: counts.iter().filter(|b| b.iter().any(|&c| c > 0)).count(),
                });
            }
            AttributeKind::Continuous => continuous_candidates(rows, attribute, n_labels, &mut out),
        }
    }
    out
}

/// Sorted sweep over one continuous attribute.
fn continuous_candidates<F: Scalar>(rows: &[&Instance<F>], attribute: usize, n_labels: usize, out: &mut Vec<Split<F>>) {
    let mut known: Vec<(F, usize)> = Vec::with_capacity(rows.len());
    let mut missing = vec![0usize; n_labels];
    for r in rows {
        match r.values[attribute] {
            Value::Continuous(x) => known.push((x, r.label)),
            _ => missing[r.label] += 1,
        }
    }
    known.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut right = vec![0usize; n_labels];
    for &(_, l) in &known {
        right[l] += 1;
    }
    let mut left = vec![0usize; n_labels];
    let two = F::lit(2.0);
    for k in 0..known.len().saturating_sub(1) {
        let (x, l) = known[k];
        left[l] += 1;
        right[l] -= 1;
        let next = known[k + 1].0;
        if next <= x {
            continue;
        }
        let mut threshold = (x + next) / two;
        if threshold >= next || threshold < x {
            threshold = x;
        }
        let n_left = k + 1;
        let n_right = known.len() - n_left;
        let mut branches = [left.clone(), right.clone()];
        let majority = usize::from(n_right > n_left);
        for (b, m) in branches[majority].iter_mut().zip(&missing) {
            *b += m;
        }
        out.push(Split {
            attribute,
            threshold: Some(threshold),
            gain: GainRatio::from_branches(&branches),
            occupied_branches: 2,
        });
    }
}

/// Applies the C4.5 selection rule to an ordered candidate list: among
/// candidates whose gain reaches the mean gain of the positive-gain
/// candidates, take the highest gain ratio; the earliest candidate wins ties.
pub(crate) fn select_split<F: Scalar>(candidates: &[Split<F>]) -> Option<Split<F>> {
    let tol = F::tolerance();
    let positive: Vec<F> = candidates
        .iter()
        .map(|c| c.gain.info_gain)
        .filter(|g| *g > tol)
        .collect();
    if positive.is_empty() {
        return None;
    }
    let mean = positive.iter().fold(F::zero(), |a, &g| a + g) / F::from_count(positive.len());
    let eligible = || {
        candidates
            .iter()
            .filter(move |c| c.gain.info_gain > tol && c.gain.info_gain >= mean - tol)
    };
    let best = eligible().map(|c| c.gain.ratio).fold(F::neg_infinity(), F::max);
    eligible().find(|c| c.gain.ratio >= best - tol).copied()
}

pub(crate) fn choose_split_rows<F: Scalar>(schema: &AttributeSchema, rows: &[&Instance<F>]) -> Option<Split<F>> {
    select_split(&candidate_splits(schema, rows))
}

/// Best split of `data`, or `None` when no candidate has positive gain.
pub fn choose_split<F: Scalar>(data: &Dataset<F>) -> Result<Option<Split<F>>> {
    if data.is_empty() {
        return Err(Error::usage("choose_split on an empty dataset"));
    }
    let rows: Vec<&Instance<F>> = data.rows().iter().collect();
    Ok(choose_split_rows(data.schema(), &rows))
}
