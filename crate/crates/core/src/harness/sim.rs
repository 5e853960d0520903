//! Tick-by-tick scenario driver against an in-process server.

use serde::Serialize;

use super::battery::{simulate_battery_hours, DrainModel};
use super::relevance::{
    aggregate_relevance, score_relevance, BatterySession, Relevance, RelevanceReport, RelevanceTally,
};
use super::scenario::ScenarioScript;
use super::user::{NoiseStream, UserModel};
use crate::context::{assemble_context, featurize, AttributeRow, ContextInputs, TimeInstant};
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::protocol::{build_context_xml, parse_settings_xml, ContextUpload, DocumentStatus};
use crate::server::{ObservationStore, ServerParams, ServerState};
use crate::settings::{CriticalServices, SettingsProfile};

/// Client id used for simulated uploads.
pub const SIM_CLIENT_ID: &str = "sim-device";

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub tick: usize,
    pub at: TimeInstant,
    pub row: AttributeRow,
    pub status: DocumentStatus,
    pub sequence: u64,
    /// Present only on trained responses.
    pub suggested: Option<SettingsProfile>,
    pub truth: SettingsProfile,
    pub grade: Option<Relevance>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutcome {
    pub tally: RelevanceTally,
    pub trace: Vec<TraceRow>,
}

#[derive(Serialize)]
struct TraceRecord<'a> {
    tick: usize,
    epoch: u64,
    zone: &'a str,
    event: &'a str,
    callcount: u32,
    callcat: &'a str,
    battery: f64,
    crisis: &'a str,
    status: &'a str,
    sequence: u64,
    suggested: String,
    truth: String,
    grade: &'a str,
}

impl SimOutcome {
    /// Index of the first tick answered with a trained suggestion.
    pub fn first_serving_tick(&self) -> Option<usize> {
        self.trace.iter().find(|t| t.suggested.is_some()).map(|t| t.tick)
    }

    /// Relevance over the graded ticks as a single-session report.
    pub fn report<F: Scalar>(&self) -> Result<RelevanceReport<F>> {
        let session = self
            .tally
            .session()
            .ok_or_else(|| Error::usage("scenario produced no trained suggestions"))?;
        aggregate_relevance(&[session])
    }

    /// Trace as CSV with a header row.
    pub fn trace_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.trace {
            w.serialize(TraceRecord {
                tick: t.tick,
                epoch: t.at.0,
                zone: &t.row.zone_id,
                event: &t.row.event_category,
                callcount: t.row.call_count,
                callcat: &t.row.last_call_category,
                battery: t.row.battery_pct,
                crisis: if t.row.crisis { "yes" } else { "no" },
                status: t.status.as_str(),
                sequence: t.sequence,
                suggested: t.suggested.map(|p| p.to_compact()).unwrap_or_default(),
                truth: t.truth.to_compact(),
                grade: t.grade.map_or("", Relevance::code),
            })
            .map_err(|e| Error::usage(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::usage(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::usage(e.to_string()))
    }

    /// Battery life from the first trained suggestion onward, with the
    /// user's own settings versus the served ones. Each tick lasts until the
    /// next; the last tick repeats the previous gap. Without any suggestion
    /// the whole trace is used and both columns agree.
    pub fn battery_comparison<F: Scalar>(&self, model: &DrainModel<F>) -> Result<BatterySession<F>> {
        let start = self.first_serving_tick().unwrap_or(0);
        let trace = &self.trace[start.min(self.trace.len())..];
        let hours: Vec<F> = trace
            .windows(2)
            .map(|w| F::lit((w[1].at.0 - w[0].at.0) as f64 / 3600.0))
            .collect();
        let last = hours.last().copied().unwrap_or_else(F::one);
        let duration = |i: usize| hours.get(i).copied().unwrap_or(last);
        let normal: Vec<(SettingsProfile, F)> = trace.iter().enumerate().map(|(i, t)| (t.truth, duration(i))).collect();
        let managed: Vec<(SettingsProfile, F)> = trace
            .iter()
            .enumerate()
            .map(|(i, t)| (t.suggested.unwrap_or(t.truth), duration(i)))
            .collect();
        Ok(BatterySession {
            normal_hours: simulate_battery_hours(&normal, model)?,
            cosmos_hours: simulate_battery_hours(&managed, model)?,
        })
    }
}

/// Runs `script` against a fresh in-memory server. Each tick's upload carries
/// the user's (possibly noisy) preference as its observed profile, travels
/// through the XML codec, and the answer is graded against that preference
/// whenever it is a trained suggestion.
pub fn run_scenario(
    script: &ScenarioScript,
    user: &UserModel,
    params: &ServerParams,
    critical: &CriticalServices,
) -> Result<SimOutcome> {
    script.validate()?;
    user.validate()?;
    let mut server = ServerState::new(*params, critical.clone(), ObservationStore::in_memory())?;
    let mut noise = NoiseStream::new(script.seed);
    let mut tally = RelevanceTally::default();
    let mut trace = Vec::with_capacity(script.ticks.len());
    for (i, tick) in script.ticks.iter().enumerate() {
        let ctx = assemble_context(&ContextInputs {
            location: &tick.location,
            events: &tick.events,
            calls: &tick.calls,
            battery_pct: tick.battery_pct,
            threshold_pct: script.threshold_pct,
            now: tick.at,
            window: script.window,
        })
        .map_err(|e| Error::usage(format!("tick {}: {e}", i + 1)))?;
        let row = featurize(&ctx, &script.zones);
        let preferred = user.preferred(&row, &tick.truth);
        let truth = noise.perturb(preferred, user.noise_rate);
        let upload = ContextUpload::new(row.clone(), Some(truth), SIM_CLIENT_ID, tick.at)
            .map_err(|e| Error::usage(format!("tick {}: {e}", i + 1)))?;
        let response = server.respond(&build_context_xml(&upload));
        let doc = parse_settings_xml(&response).map_err(|e| {
            Error::usage(format!(
                "tick {}: server answered {:?}: {e}",
                i + 1,
                String::from_utf8_lossy(&response)
            ))
        })?;
        let suggested = doc.suggestion().copied();
        let grade = suggested.map(|s| score_relevance(&s, &truth));
        if let Some(g) = grade {
            tally.record(g);
        }
        trace.push(TraceRow {
            tick: i,
            at: tick.at,
            row,
            status: doc.status(),
            sequence: doc.sequence(),
            suggested,
            truth,
            grade,
        });
    }
    Ok(SimOutcome { tally, trace })
}
