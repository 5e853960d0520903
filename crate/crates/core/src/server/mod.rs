//! The configuration server: observation ingest, the training/serving
//! lifecycle, and request handling.
//!
//! The server answers every request with a settings document. Until the
//! classifiers are sufficiently trained the answer is a training-phase
//! placeholder. Labelled uploads are appended to the store, and every
//! `retrain_every` new observations the six per-setting trees are retrained on
//! the oldest 80% of the store and scored on the newest 20%.

mod features;
pub mod net;
mod store;

pub use features::{ContextEncoder, ATTRIBUTE_NAMES};
pub use store::{Observation, ObservationStore};

use std::sync::{Arc, Mutex, PoisonError, RwLock};

use serde::{Deserialize, Serialize};

use crate::context::AttributeRow;
use crate::dtree::{is_sufficiently_trained, train, SufficiencyParams, TrainParams};
use crate::error::{Error, Result};
use crate::protocol::{
    build_settings_xml, encode_sms, parse_context_xml, ContextUpload, ProtocolError, SettingsDocument,
};
use crate::settings::{
    apply_battery_override, decide_profile, CriticalServices, ProfileTrees, Setting, SettingsProfile,
};

/// Environment variable naming the store file.
pub const STORE_ENV: &str = "COSMOS_STORE";
/// Request/response prefix selecting the SMS encoding of the response.
pub const SMS_PREFIX: &[u8] = b"SMS ";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerParams {
    pub min_rows: usize,
    pub min_accuracy: f64,
    pub retrain_every: usize,
    pub train: TrainParams,
}

impl Default for ServerParams {
    fn default() -> Self {
        Self {
            min_rows: 50,
            min_accuracy: 0.70,
            retrain_every: 25,
            train: TrainParams::default(),
        }
    }
}

impl ServerParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_rows < 2 {
            return Err(Error::usage("min_rows must be >= 2"));
        }
        if self.retrain_every == 0 {
            return Err(Error::usage("retrain_every must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.min_accuracy) {
            return Err(Error::usage("min_accuracy must lie in [0, 1]"));
        }
        Ok(())
    }

    fn sufficiency(&self) -> SufficiencyParams {
        SufficiencyParams {
            min_rows: self.min_rows,
            min_accuracy: self.min_accuracy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Training,
    Serving,
}

/// Six trees plus the encoder they were trained with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub encoder: ContextEncoder,
    pub trees: ProfileTrees<f64>,
    pub holdout_accuracy: f64,
    pub trained_rows: usize,
}

impl TrainedModel {
    pub fn decide(&self, row: &AttributeRow) -> Result<SettingsProfile> {
        decide_profile(&self.trees, &self.encoder.encode(row))
    }
}

/// Trains the six trees on the oldest 80% of `observations` and returns the
/// model with its mean per-setting accuracy on the newest 20%.
pub fn fit_model(observations: &[Observation], params: TrainParams) -> Result<TrainedModel> {
    let n = observations.len();
    if n < 2 {
        return Err(Error::usage("need at least two observations to train and validate"));
    }
    let holdout_len = (n / 5).max(1);
    let (training, holdout) = observations.split_at(n - holdout_len);
    let encoder = ContextEncoder::fit(training.iter().map(|o| &o.row));
    let mut trees = Vec::with_capacity(Setting::ALL.len());
    for setting in Setting::ALL {
        let data = encoder.dataset(setting, training.iter().map(|o| (&o.row, &o.label)))?;
        trees.push(train(&data, params)?);
    }
    let trees = ProfileTrees::new(trees)?;
    let mut correct = 0usize;
    for obs in holdout {
        let values = encoder.encode(&obs.row);
        for (setting, tree) in trees.iter() {
            if tree.classify(&values)?.0 == obs.label.label_index(setting) {
                correct += 1;
            }
        }
    }
    let holdout_accuracy = correct as f64 / (holdout.len() * Setting::ALL.len()) as f64;
    Ok(TrainedModel {
        encoder,
        trees,
        holdout_accuracy,
        trained_rows: training.len(),
    })
}

/// Immutable view published to request handlers.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub phase: Phase,
    pub model: Option<Arc<TrainedModel>>,
    pub latest_seq: u64,
}

/// Answers one request against a published snapshot.
pub fn answer(snapshot: &Snapshot, critical: &CriticalServices, upload: &ContextUpload) -> Result<SettingsDocument> {
    match (&snapshot.phase, &snapshot.model) {
        (Phase::Serving, Some(model)) => {
            let profile = model.decide(upload.row())?;
            let profile = apply_battery_override(profile, upload.row(), critical);
            Ok(SettingsDocument::trained(profile, snapshot.latest_seq))
        }
        _ => Ok(SettingsDocument::training(snapshot.latest_seq)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RetrainOutcome {
    NotDue,
    /// Due, but the store is still below `min_rows`.
    TooFewRows,
    /// A new model passed the bar and is now being served.
    Promoted {
        holdout_accuracy: f64,
    },
    /// A new model missed the bar; the previous state is kept.
    Rejected {
        holdout_accuracy: f64,
    },
}

/// Single-writer server state.
#[derive(Debug)]
pub struct ServerState {
    store: ObservationStore,
    params: ServerParams,
    critical: CriticalServices,
    snapshot: Arc<Snapshot>,
    last_attempt_len: usize,
}

impl ServerState {
    /// Builds the state and, if the store already holds enough rows, trains.
    pub fn new(params: ServerParams, critical: CriticalServices, store: ObservationStore) -> Result<Self> {
        params.validate()?;
        let snapshot = Arc::new(Snapshot {
            phase: Phase::Training,
            model: None,
            latest_seq: store.latest_seq(),
        });
        let mut state = Self {
            store,
            params,
            critical,
            snapshot,
            last_attempt_len: 0,
        };
        state.retrain_if_due()?;
        Ok(state)
    }

    pub fn phase(&self) -> Phase {
        self.snapshot.phase
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.snapshot)
    }

    pub fn store(&self) -> &ObservationStore {
        &self.store
    }

    pub fn params(&self) -> &ServerParams {
        &self.params
    }

    pub fn critical(&self) -> &CriticalServices {
        &self.critical
    }

    pub fn ingest_observation(&mut self, upload: &ContextUpload) -> Result<u64> {
        let label = upload
            .observed()
            .ok_or_else(|| Error::usage("upload carries no observed profile"))?;
        let seq = self.store.append(upload.row().clone(), *label, upload.at())?;
        self.snapshot = Arc::new(Snapshot {
            latest_seq: seq,
            ..(*self.snapshot).clone()
        });
        Ok(seq)
    }

    pub fn retrain_if_due(&mut self) -> Result<RetrainOutcome> {
        let n = self.store.len();
        if n < self.last_attempt_len + self.params.retrain_every {
            return Ok(RetrainOutcome::NotDue);
        }
        self.last_attempt_len = n;
        if n < self.params.min_rows {
            return Ok(RetrainOutcome::TooFewRows);
        }
        let model = fit_model(self.store.observations(), self.params.train)?;
        let holdout_accuracy = model.holdout_accuracy;
        if !is_sufficiently_trained(n, holdout_accuracy, self.params.sufficiency()) {
            return Ok(RetrainOutcome::Rejected { holdout_accuracy });
        }
        self.snapshot = Arc::new(Snapshot {
            phase: Phase::Serving,
            model: Some(Arc::new(model)),
            latest_seq: self.store.latest_seq(),
        });
        Ok(RetrainOutcome::Promoted { holdout_accuracy })
    }

    pub fn handle_context_request(&self, upload: &ContextUpload) -> Result<SettingsDocument> {
        answer(&self.snapshot, &self.critical, upload)
    }

    /// Full request cycle for one message body: answer from the current
    /// snapshot, then ingest the label (if any) and retrain when due.
    pub fn respond(&mut self, body: &[u8]) -> Vec<u8> {
        process_message(body, self)
    }
}

impl Responder for ServerState {
    fn answer(&self, upload: &ContextUpload) -> Result<SettingsDocument> {
        self.handle_context_request(upload)
    }

    fn ingest(&mut self, upload: &ContextUpload) -> Result<()> {
        self.ingest_observation(upload)?;
        self.retrain_if_due().map(|_| ())
    }
}

trait Responder {
    fn answer(&self, upload: &ContextUpload) -> Result<SettingsDocument>;
    fn ingest(&mut self, upload: &ContextUpload) -> Result<()>;
}

fn error_response(sms: bool, code: &str, detail: &str) -> Vec<u8> {
    if sms {
        format!("SMS ERR {code}").into_bytes()
    } else {
        format!("ERR {code} {detail}").into_bytes()
    }
}

fn process_message(body: &[u8], responder: &mut impl Responder) -> Vec<u8> {
    let (sms, xml) = match body.strip_prefix(SMS_PREFIX) {
        Some(rest) => (true, rest),
        None => (false, body),
    };
    let upload = match parse_context_xml(xml) {
        Ok(u) => u,
        Err(ProtocolError { kind, detail }) => return error_response(sms, kind.code(), &detail),
    };
    let doc = match responder.answer(&upload) {
        Ok(d) => d,
        Err(e) => return error_response(sms, "INTERNAL", &e.to_string()),
    };
    if upload.observed().is_some() {
        if let Err(e) = responder.ingest(&upload) {
            return error_response(sms, "INTERNAL", &e.to_string());
        }
    }
    if sms {
        let mut out = SMS_PREFIX.to_vec();
        out.extend_from_slice(encode_sms(&doc).as_bytes());
        out
    } else {
        build_settings_xml(&doc)
    }
}

/// Thread-safe wrapper: requests read the last published snapshot while
/// ingest and retraining serialise on the writer lock.
#[derive(Debug)]
pub struct SharedServer {
    writer: Mutex<ServerState>,
    published: RwLock<Arc<Snapshot>>,
    critical: CriticalServices,
}

impl SharedServer {
    pub fn new(state: ServerState) -> Self {
        Self {
            published: RwLock::new(state.snapshot()),
            critical: state.critical().clone(),
            writer: Mutex::new(state),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.published.read().unwrap_or_else(PoisonError::into_inner))
    }

    pub fn respond(&self, body: &[u8]) -> Vec<u8> {
        process_message(
            body,
            &mut SharedRequest {
                server: self,
                snapshot: self.snapshot(),
            },
        )
    }
}

struct SharedRequest<'a> {
    server: &'a SharedServer,
    snapshot: Arc<Snapshot>,
}

impl Responder for SharedRequest<'_> {
    fn answer(&self, upload: &ContextUpload) -> Result<SettingsDocument> {
        answer(&self.snapshot, &self.server.critical, upload)
    }

    fn ingest(&mut self, upload: &ContextUpload) -> Result<()> {
        let mut state = self.server.writer.lock().unwrap_or_else(PoisonError::into_inner);
        state.ingest_observation(upload)?;
        let outcome = state.retrain_if_due();
        *self.server.published.write().unwrap_or_else(PoisonError::into_inner) = state.snapshot();
        outcome.map(|_| ())
    }
}
