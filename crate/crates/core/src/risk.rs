//! Risk component: per-context trust thresholds, Grant/Deny decisions, and
//! the log comparing expected with achieved QoE.
//!
//! Context recognition is a pass-through: the caller supplies the
//! [`AppContext`] of each session.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{AppContext, NetworkId};

#[derive(Debug, Error, PartialEq)]
pub enum RiskError {
    #[error("risk table has no threshold for context `{0}`")]
    MissingContext(AppContext),
    #[error("{field} = {value} outside [0, 1]")]
    OutOfRange { field: &'static str, value: f64 },
}

/// Minimum trust required per application context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskTable(pub BTreeMap<AppContext, f64>);

impl Default for RiskTable {
    fn default() -> Self {
        Self(
            [
                (AppContext::Browsing, 0.3),
                (AppContext::Gaming, 0.5),
                (AppContext::Streaming, 0.5),
                (AppContext::Banking, 0.8),
            ]
            .into_iter()
            .collect(),
        )
    }
}

impl RiskTable {
    /// A table granting everything.
    pub fn permissive() -> Self {
        Self(AppContext::ALL.iter().map(|&c| (c, 0.0)).collect())
    }
}

pub fn risk_threshold(context: AppContext, table: &RiskTable) -> Result<f64, RiskError> {
    table
        .0
        .get(&context)
        .copied()
        .ok_or(RiskError::MissingContext(context))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskRequest {
    pub network: NetworkId,
    pub context: AppContext,
    pub trust: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Grant,
    Deny,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub threshold_used: f64,
    /// `trust - threshold`; the verdict is Grant iff this is non-negative.
    pub margin: f64,
}

impl Decision {
    pub fn granted(&self) -> bool {
        self.verdict == Verdict::Grant
    }
}

/// Answers a risk request. The threshold is inclusive.
pub fn decide(req: &RiskRequest, table: &RiskTable) -> Result<Decision, RiskError> {
    let threshold = risk_threshold(req.context, table)?;
    let verdict = if req.trust >= threshold {
        Verdict::Grant
    } else {
        Verdict::Deny
    };
    Ok(Decision {
        verdict,
        threshold_used: threshold,
        margin: req.trust - threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeRecord {
    /// Trust in the network at selection time.
    pub expected: f64,
    /// QoE actually achieved.
    pub actual: f64,
    pub context: AppContext,
    pub round: u64,
}

impl OutcomeRecord {
    pub fn discrepancy(&self) -> f64 {
        (self.expected - self.actual).abs()
    }
}

/// Append-only log of expected-vs-actual outcomes for one peer.
#[derive(Debug, Clone, Default)]
pub struct OutcomeLog {
    records: Vec<OutcomeRecord>,
}

impl OutcomeLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_outcome(&mut self, rec: OutcomeRecord) -> Result<(), RiskError> {
        for (field, value) in [("expected", rec.expected), ("actual", rec.actual)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(RiskError::OutOfRange { field, value });
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn records(&self) -> &[OutcomeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean discrepancy over the last `window` records for `context`; zero
    /// when there are none (or when `window` is zero).
    pub fn misprediction_rate(&self, context: AppContext, window: usize) -> f64 {
        let recent: Vec<f64> = self
            .records
            .iter()
            .rev()
            .filter(|r| r.context == context)
            .take(window)
            .map(OutcomeRecord::discrepancy)
            .collect();
        if recent.is_empty() {
            return 0.0;
        }
        (recent.iter().sum::<f64>() / recent.len() as f64).clamp(0.0, 1.0)
    }
}
