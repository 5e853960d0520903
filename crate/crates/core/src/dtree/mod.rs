//! C4.5/J48-style decision trees over categorical and continuous attributes.
//!
//! Splits are chosen by gain ratio, restricted to candidates whose information
//! gain is at least the mean gain of the informative candidates. Continuous
//! attributes are split at midpoints between adjacent distinct values. A row
//! missing the tested attribute follows the branch that received the most
//! training rows, both while training and while classifying.

mod schema;
mod split;
mod tree;

pub use schema::{Attribute, AttributeKind, AttributeSchema, Dataset, Instance, Value};
pub use split::{choose_split, entropy, gain_ratio, GainRatio, Split};
pub use tree::{is_sufficiently_trained, train, DecisionTree, SufficiencyParams, TrainParams, TreeNode};
