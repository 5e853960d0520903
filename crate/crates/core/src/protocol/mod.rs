//! Wire formats exchanged between client and server: the settings document,
//! the context upload, and the compact SMS fallback for settings.

mod sms;
mod xml;

pub use sms::{decode_sms, encode_sms, SMS_MAX_LEN};
pub use xml::{build_context_xml, build_settings_xml, parse_context_xml, parse_settings_xml};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{AttributeRow, TimeInstant};
use crate::error::{Error, Result};
use crate::settings::{SettingsProfile, SENTINEL_PROFILE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolErrorKind {
    /// Not parseable at all.
    Malformed,
    /// Parseable, but wrong, missing or extra elements or attributes.
    SchemaViolation,
    /// Structurally valid, with a value outside its domain.
    ValueError,
}

impl ProtocolErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            ProtocolErrorKind::Malformed => "MALFORMED",
            ProtocolErrorKind::SchemaViolation => "SCHEMA_VIOLATION",
            ProtocolErrorKind::ValueError => "VALUE_ERROR",
        }
    }
}

impl fmt::Display for ProtocolErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind}: {detail}")]
pub struct ProtocolError {
    pub kind: ProtocolErrorKind,
    pub detail: String,
}

impl ProtocolError {
    pub(crate) fn malformed(detail: impl Into<String>) -> Self {
        Self {
            kind: ProtocolErrorKind::Malformed,
            detail: detail.into(),
        }
    }

    pub(crate) fn schema(detail: impl Into<String>) -> Self {
        Self {
            kind: ProtocolErrorKind::SchemaViolation,
            detail: detail.into(),
        }
    }

    pub(crate) fn value(detail: impl Into<String>) -> Self {
        Self {
            kind: ProtocolErrorKind::ValueError,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DocumentStatus {
    Trained,
    Training,
}

impl DocumentStatus {
    /// Lower-case name used in the XML `status` attribute.
    pub fn as_str(self) -> &'static str {
        match self {
            DocumentStatus::Trained => "trained",
            DocumentStatus::Training => "training",
        }
    }
}

/// Server response: a profile suggestion, or the training-phase placeholder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SettingsDocument {
    profile: SettingsProfile,
    status: DocumentStatus,
    sequence: u64,
}

impl SettingsDocument {
    pub fn trained(profile: SettingsProfile, sequence: u64) -> Self {
        Self {
            profile,
            status: DocumentStatus::Trained,
            sequence,
        }
    }

    /// Training-phase response carrying [`SENTINEL_PROFILE`].
    pub fn training(sequence: u64) -> Self {
        Self {
            profile: SENTINEL_PROFILE,
            status: DocumentStatus::Training,
            sequence,
        }
    }

    pub(crate) fn from_parts(
        profile: SettingsProfile,
        status: DocumentStatus,
        sequence: u64,
    ) -> Result<Self, ProtocolError> {
        if status == DocumentStatus::Training && profile != SENTINEL_PROFILE {
            return Err(ProtocolError::value(
                "training documents must carry the sentinel profile",
            ));
        }
        Ok(Self {
            profile,
            status,
            sequence,
        })
    }

    pub fn profile(&self) -> &SettingsProfile {
        &self.profile
    }

    pub fn status(&self) -> DocumentStatus {
        self.status
    }

    pub fn sequence(&self) -> u64 {
        self.sequence
    }

    /// The suggested profile, or `None` during training.
    pub fn suggestion(&self) -> Option<&SettingsProfile> {
        (self.status == DocumentStatus::Trained).then_some(&self.profile)
    }
}

/// Client upload: the featurized context, optionally labelled with the
/// settings the user actually had.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextUpload {
    row: AttributeRow,
    observed: Option<SettingsProfile>,
    client_id: String,
    at: TimeInstant,
}

impl ContextUpload {
    pub fn new(
        row: AttributeRow,
        observed: Option<SettingsProfile>,
        client_id: impl Into<String>,
        at: TimeInstant,
    ) -> Result<Self> {
        let client_id = client_id.into();
        if !is_valid_client_id(&client_id) {
            return Err(Error::usage(format!("invalid client id {client_id:?}")));
        }
        row.validate()?;
        Ok(Self {
            row,
            observed,
            client_id,
            at,
        })
    }

    pub fn row(&self) -> &AttributeRow {
        &self.row
    }

    pub fn observed(&self) -> Option<&SettingsProfile> {
        self.observed.as_ref()
    }

    pub fn client_id(&self) -> &str {
        &self.client_id
    }

    pub fn at(&self) -> TimeInstant {
        self.at
    }
}

pub(crate) fn is_valid_client_id(id: &str) -> bool {
    !id.is_empty() && id.trim() == id && !id.chars().any(char::is_control)
}
