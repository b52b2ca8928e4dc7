//! Per-round report. Field order here is the JSON key order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::evidence::{AppContext, NetworkId, PseudonymId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub peer: PseudonymId,
    pub context: AppContext,
    /// Selected network, `null` when nothing was acceptable.
    pub network: Option<NetworkId>,
    /// Combined trust of the selected network.
    pub trust: Option<f64>,
    /// Decision margin of the selected network.
    pub margin: Option<f64>,
    pub granted: usize,
    pub qoe: Option<f64>,
    /// Network the observation was filed under.
    pub attributed: Option<NetworkId>,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub id: NetworkId,
    pub beacon: String,
    pub true_quality: f64,
    /// Mean combined trust over honest peers; `null` without honest peers.
    pub mean_trust: Option<f64>,
    /// Mean over honest peers of |combined trust - true quality|.
    pub mean_abs_error: Option<f64>,
    pub selected: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageCounts {
    pub sent: u64,
    pub accepted: u64,
    pub stored: u64,
    pub rejected_spoofs: u64,
    pub relayed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportCounts {
    pub hosted_before_denial: u64,
    pub destroyed: u64,
    pub served: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackReport {
    pub kind: String,
    /// Counter names in alphabetical order.
    pub counters: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u64,
    pub sessions: Vec<SessionReport>,
    pub networks: Vec<NetworkReport>,
    pub messages: MessageCounts,
    pub support: SupportCounts,
    pub pruned: u64,
    pub mean_misprediction: f64,
    pub attacks: Vec<AttackReport>,
}

impl RoundReport {
    pub fn empty(round: u64) -> Self {
        Self {
            round,
            sessions: Vec::new(),
            networks: Vec::new(),
            messages: MessageCounts::default(),
            support: SupportCounts::default(),
            pruned: 0,
            mean_misprediction: 0.0,
            attacks: Vec::new(),
        }
    }

    /// `(peer, selected network)` for every session, in peer order.
    pub fn selection_column(&self) -> Vec<(&PseudonymId, Option<&NetworkId>)> {
        self.sessions
            .iter()
            .map(|s| (&s.peer, s.network.as_ref()))
            .collect()
    }

    pub fn attack_counter(&self, kind: &str, name: &str) -> u64 {
        self.attacks
            .iter()
            .filter(|a| a.kind == kind)
            .filter_map(|a| a.counters.get(name))
            .sum()
    }
}
