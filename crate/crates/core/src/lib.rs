//! Context-sensitive configuration of smartphone settings.
//!
//! The crate is organised bottom-up:
//!
//! * [`context`] assembles the four-factor context (location, scheduler, call
//!   log, battery) and turns it into a classifier row.
//! * [`dtree`] is a C4.5-style decision tree, generic over the scalar type
//!   used for continuous attributes.
//! * [`settings`] models the six-setting profile and the low-battery override.
//! * [`protocol`] holds the XML documents and the SMS fallback codec.
//! * [`server`] keeps the observation store and manages the training/serving
//!   lifecycle.
//! * [`harness`] drives scripted scenarios and reproduces the evaluation
//!   arithmetic.
//!
//! Generic items are parameterised over [`Scalar`]; the aliases below fix the
//! common `f64` and `f32` instantiations.

pub mod context;
pub mod dtree;
pub mod error;
pub mod harness;
pub mod num;
pub mod protocol;
pub mod server;
pub mod settings;

pub use error::{Error, Result};
pub use num::Scalar;

/// Decision tree over `f64` continuous attributes (the server's model type).
pub type Tree = dtree::DecisionTree<f64>;
/// Decision tree over `f32` continuous attributes.
pub type Tree32 = dtree::DecisionTree<f32>;
pub type Dataset = dtree::Dataset<f64>;
pub type Dataset32 = dtree::Dataset<f32>;
pub type Value = dtree::Value<f64>;
pub type ProfileTrees = settings::ProfileTrees<f64>;
pub type RelevanceReport = harness::RelevanceReport<f64>;
pub type BatteryReport = harness::BatteryReport<f64>;
pub type DrainModel = harness::DrainModel<f64>;
