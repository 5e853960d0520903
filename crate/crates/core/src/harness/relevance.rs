//! Relevance grading of suggestions and the per-session aggregates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::settings::{diff_profiles, SettingsProfile};

/// Allowed deviation of a session triple from 100%.
pub const TRIPLE_SUM_TOLERANCE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relevance {
    /// All six settings agree.
    Complete,
    /// Four or five settings agree.
    Partial,
    /// Three or fewer agree.
    Irrelevant,
}

impl Relevance {
    pub fn code(self) -> &'static str {
        match self {
            Relevance::Complete => "CR",
            Relevance::Partial => "PR",
            Relevance::Irrelevant => "CIR",
        }
    }

    pub fn from_matches(matches: usize) -> Self {
        match matches {
            6.. => Relevance::Complete,
            4 | 5 => Relevance::Partial,
            _ => Relevance::Irrelevant,
        }
    }
}

pub fn score_relevance(suggested: &SettingsProfile, truth: &SettingsProfile) -> Relevance {
    Relevance::from_matches(diff_profiles(suggested, truth).matches)
}

/// Running grade counts for one session.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceTally {
    pub complete: usize,
    pub partial: usize,
    pub irrelevant: usize,
}

impl RelevanceTally {
    pub fn record(&mut self, grade: Relevance) {
        match grade {
            Relevance::Complete => self.complete += 1,
            Relevance::Partial => self.partial += 1,
            Relevance::Irrelevant => self.irrelevant += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.complete + self.partial + self.irrelevant
    }

    /// Percentages, or `None` when nothing was graded.
    pub fn session<F: Scalar>(&self) -> Option<SessionRelevance<F>> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let pct = |n: usize| F::from_count(n) * F::lit(100.0) / F::from_count(total);
        Some(SessionRelevance {
            crs: pct(self.complete),
            prs: pct(self.partial),
            cis: pct(self.irrelevant),
        })
    }
}

/// One session's relevance percentages.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct SessionRelevance<F> {
    pub crs: F,
    pub prs: F,
    pub cis: F,
}

impl<F: Scalar> SessionRelevance<F> {
    pub fn validate(&self) -> Result<()> {
        let hundred = F::lit(100.0);
        for v in [self.crs, self.prs, self.cis] {
            if !(v >= F::zero() && v <= hundred) {
                return Err(Error::usage(format!("percentage {v} outside [0, 100]")));
            }
        }
        let sum = self.crs + self.prs + self.cis;
        if (sum - hundred).abs() > F::lit(TRIPLE_SUM_TOLERANCE) {
            return Err(Error::usage(format!("session percentages sum to {sum}, not 100")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RelevanceReport<F> {
    pub sessions: Vec<SessionRelevance<F>>,
    pub mean_crs: F,
    pub mean_prs: F,
    pub mean_cis: F,
    /// Mean CRS plus mean PRS.
    pub cumulative_relevant: F,
}

fn mean<F: Scalar>(values: impl Iterator<Item = F>, n: usize) -> F {
    values.fold(F::zero(), |acc, v| acc + v) / F::from_count(n)
}

pub fn aggregate_relevance<F: Scalar>(sessions: &[SessionRelevance<F>]) -> Result<RelevanceReport<F>> {
    if sessions.is_empty() {
        return Err(Error::usage("no relevance sessions to aggregate"));
    }
    for s in sessions {
        s.validate()?;
    }
    let n = sessions.len();
    let mean_crs = mean(sessions.iter().map(|s| s.crs), n);
    let mean_prs = mean(sessions.iter().map(|s| s.prs), n);
    let mean_cis = mean(sessions.iter().map(|s| s.cis), n);
    Ok(RelevanceReport {
        sessions: sessions.to_vec(),
        mean_crs,
        mean_prs,
        mean_cis,
        cumulative_relevant: mean_crs + mean_prs,
    })
}

/// One session's measured battery life under normal use and under managed
/// settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct BatterySession<F> {
    pub normal_hours: F,
    pub cosmos_hours: F,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct BatteryReport<F> {
    pub sessions: Vec<BatterySession<F>>,
    pub mean_normal_hours: F,
    pub mean_cosmos_hours: F,
}

pub fn aggregate_battery<F: Scalar>(sessions: &[BatterySession<F>]) -> Result<BatteryReport<F>> {
    if sessions.is_empty() {
        return Err(Error::usage("no battery sessions to aggregate"));
    }
    for s in sessions {
        if !(s.normal_hours > F::zero() && s.cosmos_hours > F::zero()) {
            return Err(Error::usage(format!(
                "battery hours must be positive, got ({}, {})",
                s.normal_hours, s.cosmos_hours
            )));
        }
    }
    let n = sessions.len();
    Ok(BatteryReport {
        sessions: sessions.to_vec(),
        mean_normal_hours: mean(sessions.iter().map(|s| s.normal_hours), n),
        mean_cosmos_hours: mean(sessions.iter().map(|s| s.cosmos_hours), n),
    })
}

#[derive(Deserialize)]
#[serde(bound = "F: Scalar")]
struct RelevanceRecord<F> {
    #[allow(dead_code)]
    session: String,
    crs: F,
    prs: F,
    cis: F,
}

#[derive(Deserialize)]
#[serde(bound = "F: Scalar")]
struct BatteryRecord<F> {
    #[allow(dead_code)]
    session: String,
    normal_hours: F,
    cosmos_hours: F,
}

fn read_csv<R: serde::de::DeserializeOwned>(text: &str, source: &str) -> Result<Vec<R>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, record) in reader.deserialize().enumerate() {
        // header is line 1
        out.push(record.map_err(|e| Error::parse(source, i + 2, e.to_string()))?);
    }
    Ok(out)
}

/// Reads `session,crs,prs,cis` rows.
pub fn parse_relevance_csv<F: Scalar>(text: &str) -> Result<Vec<SessionRelevance<F>>> {
    Ok(read_csv::<RelevanceRecord<F>>(text, "relevance table")?
        .into_iter()
        .map(|r| SessionRelevance {
            crs: r.crs,
            prs: r.prs,
            cis: r.cis,
        })
        .collect())
}

/// Reads `session,normal_hours,cosmos_hours` rows.
pub fn parse_battery_csv<F: Scalar>(text: &str) -> Result<Vec<BatterySession<F>>> {
    Ok(read_csv::<BatteryRecord<F>>(text, "battery table")?
        .into_iter()
        .map(|r| BatterySession {
            normal_hours: r.normal_hours,
            cosmos_hours: r.cosmos_hours,
        })
        .collect())
}
