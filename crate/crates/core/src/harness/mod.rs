//! Scripted evaluation: scenario files, a synthetic user, relevance and
//! battery evaluators, and the simulation driver.

mod battery;
pub mod fixtures;
mod relevance;
mod scenario;
mod sim;
mod user;

pub use battery::{simulate_battery_hours, DrainModel};
pub use relevance::{
    aggregate_battery, aggregate_relevance, parse_battery_csv, parse_relevance_csv, score_relevance, BatteryReport,
    BatterySession, Relevance, RelevanceReport, RelevanceTally, SessionRelevance, TRIPLE_SUM_TOLERANCE,
};
pub use scenario::{ScenarioScript, Tick, SCRIPT_ACCURACY_M, SCRIPT_CALL_SECONDS};
pub use sim::{run_scenario, SimOutcome, TraceRow, SIM_CLIENT_ID};
pub use user::{CompareOp, NoiseStream, Predicate, Rule, UserModel};
