//! Deterministic round-based world of peers sharing QoE evidence.
//!
//! Each round every honest peer, in pseudonym order, assesses the visible
//! networks, asks the risk component for a decision per network, selects one,
//! uses it and rates the session. A gossip phase then shares recent
//! observations with neighbors, support peers host what passes through them,
//! and honest peers pull matching evidence back from support peers.
//!
//! One seeded ChaCha stream drives all randomness. Draw order per round:
//! session context (only with several contexts), exploration (only with
//! `explore_epsilon > 0`), SSID attribution (only for an imitating beacon with
//! `p_mislead > 0`), QoE noise; then gossip neighbor sampling (only when
//! `neighbor_sample` is set); then evidence denial.

mod engine;
mod report;
mod world;

pub use engine::{assess_networks, NetworkAssessment};
pub use report::{
    AttackReport, MessageCounts, NetworkReport, RoundReport, SessionReport, SupportCounts,
};
pub use world::{Envelope, Origin, SimSettings, World};

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::evidence::{
    AppContext, EvidenceStore, KeyId, NetworkId, NetworkIdentity, Pseudonym, PseudonymId,
    QoEObservation, Recommendation,
};
use crate::risk::OutcomeLog;
use crate::trust::FriendMap;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Honest,
    Attacker,
    Support,
}

/// A network with its hidden ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthNetwork {
    pub identity: NetworkIdentity,
    pub true_quality: f64,
    /// Name broadcast to peers. Equals `claimed_name` unless imitating.
    pub beacon_name: String,
}

impl GroundTruthNetwork {
    pub fn new(identity: NetworkIdentity, true_quality: f64) -> Self {
        let beacon_name = identity.claimed_name.clone();
        Self {
            identity,
            true_quality,
            beacon_name,
        }
    }

    pub fn id(&self) -> &NetworkId {
        &self.identity.authentic_id
    }
}

#[derive(Debug, Clone)]
pub struct PeerState {
    pub pseudonym: Pseudonym,
    pub role: Role,
    pub store: EvidenceStore,
    pub friends: FriendMap,
    /// Fixed per-peer bias in [-0.2, 0.2] added to every rating.
    pub taste_offset: f64,
    pub outcome_log: OutcomeLog,
    pub neighbors: Vec<PseudonymId>,
    /// Accepted recs waiting to be forwarded in the next gossip phase.
    pub relay_queue: Vec<Recommendation>,
    pub last_context: Option<AppContext>,
}

impl PeerState {
    pub fn new(pseudonym: Pseudonym, role: Role, capacity: usize) -> Self {
        Self {
            pseudonym,
            role,
            store: EvidenceStore::new(capacity),
            friends: FriendMap::new(),
            taste_offset: 0.0,
            outcome_log: OutcomeLog::new(),
            neighbors: Vec::new(),
            relay_queue: Vec::new(),
            last_context: None,
        }
    }

    pub fn id(&self) -> &PseudonymId {
        self.pseudonym.id()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyEntry {
    pub owner: PseudonymId,
    pub compromised: bool,
}

/// Which pseudonym each key signs for. Stands in for a PKI.
#[derive(Debug, Clone, Default)]
pub struct KeyRegistry {
    keys: BTreeMap<KeyId, KeyEntry>,
}

impl KeyRegistry {
    pub fn register(&mut self, key: KeyId, owner: PseudonymId) {
        self.keys.insert(
            key,
            KeyEntry {
                owner,
                compromised: false,
            },
        );
    }

    pub fn get(&self, key: &KeyId) -> Option<&KeyEntry> {
        self.keys.get(key)
    }

    pub fn key_of(&self, owner: &PseudonymId) -> Option<&KeyId> {
        self.keys
            .iter()
            .find(|(_, e)| &e.owner == owner)
            .map(|(k, _)| k)
    }

    /// Flags every key of `owner` as compromised. Returns false if the owner
    /// has no key.
    pub fn mark_compromised(&mut self, owner: &PseudonymId) -> bool {
        let mut found = false;
        for e in self.keys.values_mut().filter(|e| &e.owner == owner) {
            e.compromised = true;
            found = true;
        }
        found
    }

    pub fn is_compromised(&self, owner: &PseudonymId) -> bool {
        self.keys
            .values()
            .any(|e| &e.owner == owner && e.compromised)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerificationVerdict {
    Verified,
    SpoofRejected,
}

/// Verified iff the claimed key is registered to the claimed recommender.
/// A compromised key still maps to its owner, so it verifies.
pub fn verify_message(rec: &Recommendation, registry: &KeyRegistry) -> VerificationVerdict {
    match registry.get(&rec.claimed_key) {
        Some(entry) if &entry.owner == rec.recommender() => VerificationVerdict::Verified,
        _ => VerificationVerdict::SpoofRejected,
    }
}

/// Subjective rating: ground truth shifted by the user's taste plus Gaussian
/// noise, clamped to [0, 1]. Always consumes exactly one normal draw.
pub fn sample_qoe(true_quality: f64, taste_offset: f64, noise_sigma: f64, rng: &mut SimRng) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (true_quality + taste_offset + noise_sigma * z).clamp(0.0, 1.0)
}

/// Which network the user believes they used.
///
/// If the beacon imitates another network's advertised name, the session is
/// attributed to that network with probability `p_mislead`. One uniform draw
/// is consumed only when an imitation target exists and `p_mislead > 0`.
pub fn attribute_network(
    beacon_name: &str,
    used: &NetworkId,
    visible: &[GroundTruthNetwork],
    p_mislead: f64,
    rng: &mut SimRng,
) -> NetworkId {
    let target = visible
        .iter()
        .find(|n| n.id() != used && n.identity.claimed_name == beacon_name);
    match target {
        Some(t) if p_mislead > 0.0 => {
            if rng.random::<f64>() < p_mislead {
                t.id().clone()
            } else {
                used.clone()
            }
        }
        _ => used.clone(),
    }
}

/// Messages one peer sends in a gossip phase, as `(recipient, rec)`.
///
/// The `fanout_budget` most recent own observations go to every neighbor at
/// hop 0. Then up to `relay_budget` queued recs (newest first) are forwarded
/// with one more hop, skipping any already at `max_hops`. With
/// `neighbor_sample = Some(k)` only `k` neighbors, drawn from `rng`, are
/// addressed.
pub fn gossip(
    peer: &mut PeerState,
    fanout_budget: usize,
    relay_budget: usize,
    max_hops: u32,
    neighbor_sample: Option<usize>,
    rng: &mut SimRng,
) -> Vec<(PseudonymId, Recommendation)> {
    let mut queued = std::mem::take(&mut peer.relay_queue);
    if fanout_budget == 0 && relay_budget == 0 {
        return Vec::new();
    }
    let targets: Vec<&PseudonymId> = match neighbor_sample {
        Some(k) if k < peer.neighbors.len() => {
            let mut idx = rand::seq::index::sample(rng, peer.neighbors.len(), k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| &peer.neighbors[i]).collect()
        }
        _ => peer.neighbors.iter().collect(),
    };

    let key = peer.pseudonym.key_id().clone();
    let own: Vec<&QoEObservation> = peer.store.observations().collect();
    let mut outgoing: Vec<Recommendation> = own
        .iter()
        .rev()
        .take(fanout_budget)
        .rev()
        .map(|o| Recommendation::new((*o).clone(), key.clone()))
        .collect();

    queued.sort_by(|a, b| {
        b.payload
            .round
            .cmp(&a.payload.round)
            .then_with(|| a.recommender().cmp(b.recommender()))
            .then_with(|| a.payload.network.cmp(&b.payload.network))
            .then_with(|| a.payload.context.cmp(&b.payload.context))
    });
    outgoing.extend(
        queued
            .iter()
            .filter(|r| r.hop_count < max_hops)
            .take(relay_budget)
            .map(Recommendation::forwarded),
    );

    let mut msgs = Vec::with_capacity(outgoing.len() * targets.len());
    for to in targets {
        for rec in &outgoing {
            msgs.push((to.clone(), rec.clone()));
        }
    }
    msgs
}

/// Hosted recs a support peer returns for one (network, context) request.
/// Anything already destroyed by a denial attack is simply gone.
pub fn support_peer_serve(
    support: &PeerState,
    network: &NetworkId,
    context: AppContext,
) -> Vec<Recommendation> {
    if support.role != Role::Support {
        return Vec::new();
    }
    support
        .store
        .matching_recommendations(network, context)
        .cloned()
        .collect()
}
