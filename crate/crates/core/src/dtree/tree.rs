use serde::{Deserialize, Serialize};

use super::schema::{AttributeSchema, Dataset, Instance, Value};
use super::split::{argmax, branch_of, candidate_splits, route_rows, select_split};
use crate::error::{Error, Result};
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainParams {
    pub min_leaf: usize,
    pub max_depth: usize,
    pub prune: bool,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            min_leaf: 2,
            max_depth: 12,
            prune: false,
        }
    }
}

impl TrainParams {
    fn validate(&self) -> Result<()> {
        if self.min_leaf == 0 || self.max_depth == 0 {
            return Err(Error::usage("min_leaf and max_depth must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub enum TreeNode<F> {
    Leaf {
        label: usize,
        /// Training class counts reaching this leaf. Leaves for values unseen
        /// in training carry their parent's counts.
        class_counts: Vec<usize>,
    },
    Internal {
        attribute: usize,
        /// `None` for a categorical test (one branch per declared value).
        threshold: Option<F>,
        children: Vec<TreeNode<F>>,
        /// Branch taken when the tested value is missing.
        majority_branch: usize,
    },
}

impl<F: Scalar> TreeNode<F> {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { children, .. } => 1 + children.iter().map(TreeNode::depth).max().unwrap_or(0),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => children.iter().map(TreeNode::leaf_count).sum(),
        }
    }

    fn walk(&self, row: &[Value<F>]) -> (usize, &[usize]) {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { label, class_counts } => return (*label, class_counts),
                TreeNode::Internal {
                    attribute,
                    threshold,
                    children,
                    majority_branch,
                } => {
                    let b = branch_of(&row[*attribute], *threshold).unwrap_or(*majority_branch);
                    node = &children[b];
                }
            }
        }
    }
}

/// A trained C4.5-style classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct DecisionTree<F> {
    root: TreeNode<F>,
    schema: AttributeSchema,
    trained_on: usize,
}

/// Majority label; ties resolve to label-domain order.
fn majority(counts: &[usize]) -> usize {
    argmax(counts.iter().copied())
}

fn class_counts<F>(rows: &[&Instance<F>], n_labels: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_labels];
    for r in rows {
        counts[r.label] += 1;
    }
    counts
}

struct Builder<'a> {
    schema: &'a AttributeSchema,
    params: TrainParams,
}

impl Builder<'_> {
    /// Returns the subtree and its training error on `rows`.
    fn build<F: Scalar>(&self, rows: &[&Instance<F>], depth: usize) -> (TreeNode<F>, usize) {
        let counts = class_counts(rows, self.schema.labels().len());
        let label = majority(&counts);
        let leaf_error = rows.len() - counts[label];
        let leaf = |counts: Vec<usize>| TreeNode::Leaf {
            label,
            class_counts: counts,
        };
        if leaf_error == 0 || depth >= self.params.max_depth || rows.len() < self.params.min_leaf {
            return (leaf(counts), leaf_error);
        }
        let candidates = candidate_splits(self.schema, rows);
        // With no informative split left (XOR-like nodes), fall back to the
        // first test that still separates the rows.
        let Some(split) =
            select_split(&candidates).or_else(|| candidates.iter().find(|c| c.occupied_branches >= 2).copied())
        else {
            return (leaf(counts), leaf_error);
        };
        let (assignment, _) = route_rows(self.schema, rows, split.attribute, split.threshold);
        let arity = self.schema.arity(split.attribute);
        let mut parts: Vec<Vec<&Instance<F>>> = vec![Vec::new(); arity];
        for (row, b) in rows.iter().zip(assignment) {
            parts[b].push(row);
        }
        let majority_branch = argmax(parts.iter().map(Vec::len));
        let mut children = Vec::with_capacity(arity);
        let mut subtree_error = 0;
        for part in &parts {
            if part.is_empty() {
                children.push(leaf(counts.clone()));
            } else {
                let (child, err) = self.build(part, depth + 1);
                subtree_error += err;
                children.push(child);
            }
        }
        if self.params.prune && leaf_error <= subtree_error {
            return (leaf(counts), leaf_error);
        }
        (
            TreeNode::Internal {
                attribute: split.attribute,
                threshold: split.threshold,
                children,
                majority_branch,
            },
            subtree_error,
        )
    }
}

/// Top-down induction. Stops at pure nodes, at `max_depth`, below `min_leaf`
/// rows, or when no test separates the rows.
pub fn train<F: Scalar>(data: &Dataset<F>, params: TrainParams) -> Result<DecisionTree<F>> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::usage("cannot train on an empty dataset"));
    }
    let rows: Vec<&Instance<F>> = data.rows().iter().collect();
    let builder = Builder {
        schema: data.schema(),
        params,
    };
    let (root, _) = builder.build(&rows, 0);
    Ok(DecisionTree {
        root,
        schema: data.schema().clone(),
        trained_on: data.len(),
    })
}

impl<F: Scalar> DecisionTree<F> {
    pub fn root(&self) -> &TreeNode<F> {
        &self.root
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn trained_on(&self) -> usize {
        self.trained_on
    }

    /// Label index and the majority-class fraction of the reached leaf.
    pub fn classify(&self, row: &[Value<F>]) -> Result<(usize, F)> {
        self.schema.check_row(row)?;
        let (label, counts) = self.root.walk(row);
        let total: usize = counts.iter().sum();
        let confidence = if total == 0 {
            F::one()
        } else {
            F::from_count(counts[label]) / F::from_count(total)
        };
        Ok((label, confidence))
    }

    pub fn classify_label(&self, row: &[Value<F>]) -> Result<(&str, F)> {
        let (label, confidence) = self.classify(row)?;
        Ok((&self.schema.labels()[label], confidence))
    }

    /// Fraction of `data` rows classified to their own label.
    pub fn accuracy(&self, data: &Dataset<F>) -> Result<F> {
        if data.schema() != &self.schema {
            return Err(Error::usage("dataset schema differs from the tree's schema"));
        }
        if data.is_empty() {
            return Ok(F::zero());
        }
        let mut correct = 0;
        for row in data.rows() {
            if self.classify(&row.values)?.0 == row.label {
                correct += 1;
            }
        }
        Ok(F::from_count(correct) / F::from_count(data.len()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyParams {
    pub min_rows: usize,
    pub min_accuracy: f64,
}

pub fn is_sufficiently_trained(store_size: usize, holdout_accuracy: f64, params: SufficiencyParams) -> bool {
    store_size >= params.min_rows && holdout_accuracy >= params.min_accuracy
}
