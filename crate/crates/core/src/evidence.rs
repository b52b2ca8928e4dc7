//! Identities, QoE evidence and the per-peer evidence store.
//!
//! Every peer keeps its own observations, the recommendations it accepted, and
//! a per-recommender agreement history built by comparing what a recommender
//! said about a network with what the peer later experienced itself.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::num::NonZeroU32;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simnet::VerificationVerdict;

#[derive(Debug, Error, PartialEq)]
pub enum EvidenceError {
    #[error("rating {0} outside [0, 1]")]
    RatingOutOfRange(f64),
    #[error("half-life must be at least one round")]
    ZeroHalfLife,
}

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_newtype!(
    /// Opaque pseudonym token. Carries no profile data.
    PseudonymId
);
id_newtype!(
    /// Opaque token naming a signing key.
    KeyId
);
id_newtype!(
    /// Authentic network identifier (not the advertised name).
    NetworkId
);
id_newtype!(ProviderId);

/// A pseudonym together with the key bound to it at creation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pseudonym {
    id: PseudonymId,
    key_id: KeyId,
}

impl Pseudonym {
    pub fn new(id: PseudonymId, key_id: KeyId) -> Self {
        Self { id, key_id }
    }

    pub fn id(&self) -> &PseudonymId {
        &self.id
    }

    pub fn key_id(&self) -> &KeyId {
        &self.key_id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkIdentity {
    pub authentic_id: NetworkId,
    /// Advertised name. Several networks may claim the same one.
    pub claimed_name: String,
    pub provider_id: ProviderId,
    /// Normalized price in [0, 1].
    pub cost: f64,
}

/// Application type of a session. Risk thresholds are keyed by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppContext {
    Browsing,
    Gaming,
    Streaming,
    Banking,
}

impl AppContext {
    pub const ALL: [AppContext; 4] = [
        AppContext::Browsing,
        AppContext::Gaming,
        AppContext::Streaming,
        AppContext::Banking,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AppContext::Browsing => "browsing",
            AppContext::Gaming => "gaming",
            AppContext::Streaming => "streaming",
            AppContext::Banking => "banking",
        }
    }
}

impl fmt::Display for AppContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One user's rating of one session on one network.
#[derive(Debug, Clone, PartialEq)]
pub struct QoEObservation {
    pub observer: PseudonymId,
    /// The network as the observer attributed it; wrong under SSID imitation.
    pub network: NetworkId,
    pub context: AppContext,
    pub rating: f64,
    pub round: u64,
}

impl QoEObservation {
    pub fn validate(&self) -> Result<(), EvidenceError> {
        check_rating(self.rating)
    }
}

fn check_rating(rating: f64) -> Result<(), EvidenceError> {
    if (0.0..=1.0).contains(&rating) {
        Ok(())
    } else {
        Err(EvidenceError::RatingOutOfRange(rating))
    }
}

/// A shared observation signed by its recommender.
///
/// The recommender is always the observer of the payload. On the wire it is a
/// flat object with exactly the fields
/// `recommender_id, claimed_key, network_id, context, rating, round, hop_count`
/// in that order, and nothing else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RecommendationWire", try_from = "RecommendationWire")]
pub struct Recommendation {
    pub payload: QoEObservation,
    pub claimed_key: KeyId,
    pub hop_count: u32,
}

impl Recommendation {
    pub fn new(payload: QoEObservation, claimed_key: KeyId) -> Self {
        Self {
            payload,
            claimed_key,
            hop_count: 0,
        }
    }

    pub fn recommender(&self) -> &PseudonymId {
        &self.payload.observer
    }

    pub fn forwarded(&self) -> Self {
        Self {
            hop_count: self.hop_count + 1,
            ..self.clone()
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecommendationWire {
    recommender_id: PseudonymId,
    claimed_key: KeyId,
    network_id: NetworkId,
    context: AppContext,
    rating: f64,
    round: u64,
    hop_count: u32,
}

impl From<Recommendation> for RecommendationWire {
    fn from(rec: Recommendation) -> Self {
        Self {
            recommender_id: rec.payload.observer,
            claimed_key: rec.claimed_key,
            network_id: rec.payload.network,
            context: rec.payload.context,
            rating: rec.payload.rating,
            round: rec.payload.round,
            hop_count: rec.hop_count,
        }
    }
}

impl TryFrom<RecommendationWire> for Recommendation {
    type Error = EvidenceError;

    fn try_from(w: RecommendationWire) -> Result<Self, Self::Error> {
        check_rating(w.rating)?;
        Ok(Self {
            payload: QoEObservation {
                observer: w.recommender_id,
                network: w.network_id,
                context: w.context,
                rating: w.rating,
                round: w.round,
            },
            claimed_key: w.claimed_key,
            hop_count: w.hop_count,
        })
    }
}

/// Evidence half-life in rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfLife(NonZeroU32);

impl HalfLife {
    pub fn new(rounds: u32) -> Result<Self, EvidenceError> {
        NonZeroU32::new(rounds)
            .map(Self)
            .ok_or(EvidenceError::ZeroHalfLife)
    }

    pub fn rounds(self) -> u32 {
        self.0.get()
    }

    /// `2^(-age / half_life)`.
    ///
    /// Split into whole half-lives and a remainder so that adding one
    /// half-life to the age halves the result exactly. Floors at the smallest
    /// positive normal value for absurdly old evidence.
    pub fn weight(self, age: u64) -> f64 {
        let h = u64::from(self.rounds());
        let whole = age / h;
        let rem = age % h;
        let frac = (-(rem as f64) / h as f64).exp2();
        if whole >= 1022 {
            return f64::MIN_POSITIVE;
        }
        (frac * (-(whole as f64)).exp2()).max(f64::MIN_POSITIVE)
    }
}

/// Exponential decay weight of evidence that is `age_rounds` old.
pub fn decayed_weight(age_rounds: u64, half_life: u32) -> Result<f64, EvidenceError> {
    Ok(HalfLife::new(half_life)?.weight(age_rounds))
}

/// One (recommended, later own) rating pair for a recommender.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementPair {
    pub recommended: f64,
    pub own: f64,
    /// Round of the own observation that closed the pair.
    pub round: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestOutcome {
    /// Verified and stored (possibly replacing an older rec from the same
    /// recommender about the same network and context).
    Stored,
    /// Verified, but an equally new or newer rec from the same recommender
    /// about the same target is already held.
    Stale,
    /// Verified, but older than everything in a full store.
    Dropped,
    /// Failed verification; counted, never stored.
    Rejected,
}

impl IngestOutcome {
    pub fn accepted(self) -> bool {
        !matches!(self, IngestOutcome::Rejected)
    }
}

type RecKey = (PseudonymId, NetworkId, AppContext);

#[derive(Debug, Clone)]
struct HeldRecommendation {
    rec: Recommendation,
    scored: bool,
}

/// Bounded evidence held by one peer.
///
/// Only the latest recommendation per (recommender, network, context) is
/// kept. Records are evicted oldest first, which is lowest decayed weight
/// first for any half-life; on equal age received recs go before own
/// observations.
#[derive(Debug, Clone)]
pub struct EvidenceStore {
    capacity: usize,
    observations: VecDeque<QoEObservation>,
    received: BTreeMap<(u64, u64), HeldRecommendation>,
    index: HashMap<RecKey, (u64, u64)>,
    rec_history: BTreeMap<PseudonymId, Vec<AgreementPair>>,
    next_seq: u64,
    rejected: u64,
}

impl EvidenceStore {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "evidence store capacity must be positive");
        Self {
            capacity,
            observations: VecDeque::new(),
            received: BTreeMap::new(),
            index: HashMap::new(),
            rec_history: BTreeMap::new(),
            next_seq: 0,
            rejected: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.observations.len() + self.received.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn observations(&self) -> impl Iterator<Item = &QoEObservation> {
        self.observations.iter()
    }

    pub fn received(&self) -> impl Iterator<Item = &Recommendation> {
        self.received.values().map(|h| &h.rec)
    }

    pub fn rejected_count(&self) -> u64 {
        self.rejected
    }

    pub fn history(&self, recommender: &PseudonymId) -> &[AgreementPair] {
        self.rec_history
            .get(recommender)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Appends an own observation.
    ///
    /// Every held, not yet scored recommendation about the same network and
    /// context is paired with this rating in its recommender's history.
    pub fn record_observation(&mut self, obs: QoEObservation) -> Result<(), EvidenceError> {
        obs.validate()?;
        for held in self.received.values_mut() {
            let p = &held.rec.payload;
            if held.scored || p.network != obs.network || p.context != obs.context {
                continue;
            }
            held.scored = true;
            self.rec_history
                .entry(p.observer.clone())
                .or_default()
                .push(AgreementPair {
                    recommended: p.rating,
                    own: obs.rating,
                    round: obs.round,
                });
        }
        self.observations.push_back(obs);
        self.enforce_capacity();
        Ok(())
    }

    /// Gatekeeping on the verification verdict: only `Verified` is stored.
    pub fn ingest_recommendation(
        &mut self,
        rec: Recommendation,
        verdict: VerificationVerdict,
    ) -> IngestOutcome {
        if verdict != VerificationVerdict::Verified {
            self.rejected += 1;
            return IngestOutcome::Rejected;
        }
        let key: RecKey = (
            rec.payload.observer.clone(),
            rec.payload.network.clone(),
            rec.payload.context,
        );
        if let Some(&slot) = self.index.get(&key) {
            if slot.0 >= rec.payload.round {
                return IngestOutcome::Stale;
            }
            self.received.remove(&slot);
        }
        let slot = (rec.payload.round, self.next_seq);
        self.next_seq += 1;
        self.received
            .insert(slot, HeldRecommendation { rec, scored: false });
        self.index.insert(key.clone(), slot);
        self.enforce_capacity();
        if self.index.get(&key) == Some(&slot) {
            IngestOutcome::Stored
        } else {
            IngestOutcome::Dropped
        }
    }

    /// Own observations for (network, context) with their decayed weights.
    pub fn query_observations(
        &self,
        network: &NetworkId,
        context: AppContext,
        now: u64,
        half_life: HalfLife,
    ) -> Vec<(f64, f64)> {
        self.observations
            .iter()
            .filter(|o| &o.network == network && o.context == context)
            .map(|o| (o.rating, half_life.weight(now.saturating_sub(o.round))))
            .collect()
    }

    /// Held recommendations for (network, context) as
    /// `(rating, recommender, decayed weight)`, oldest first.
    pub fn query_recommendations(
        &self,
        network: &NetworkId,
        context: AppContext,
        now: u64,
        half_life: HalfLife,
    ) -> Vec<(f64, &PseudonymId, f64)> {
        self.received
            .values()
            .map(|h| &h.rec.payload)
            .filter(|p| &p.network == network && p.context == context)
            .map(|p| {
                (
                    p.rating,
                    &p.observer,
                    half_life.weight(now.saturating_sub(p.round)),
                )
            })
            .collect()
    }

    /// Recommendations matching (network, context), for support serving.
    pub fn matching_recommendations<'a>(
        &'a self,
        network: &'a NetworkId,
        context: AppContext,
    ) -> impl Iterator<Item = &'a Recommendation> + 'a {
        self.received
            .values()
            .map(|h| &h.rec)
            .filter(move |r| &r.payload.network == network && r.payload.context == context)
    }

    /// `(recommended, own, weight)` triples for one recommender.
    pub fn recommender_pairs(
        &self,
        recommender: &PseudonymId,
        now: u64,
        half_life: HalfLife,
    ) -> Vec<(f64, f64, f64)> {
        self.history(recommender)
            .iter()
            .map(|p| {
                (
                    p.recommended,
                    p.own,
                    half_life.weight(now.saturating_sub(p.round)),
                )
            })
            .collect()
    }

    /// Drops records (and agreement pairs) whose decayed weight fell below
    /// `min_weight`. Returns the number of records removed.
    pub fn prune(&mut self, now: u64, min_weight: f64, half_life: HalfLife) -> usize {
        let keep = |round: u64| half_life.weight(now.saturating_sub(round)) >= min_weight;
        let before = self.len();
        self.observations.retain(|o| keep(o.round));
        let index = &mut self.index;
        self.received.retain(|_, h| {
            let k = keep(h.rec.payload.round);
            if !k {
                index.remove(&key_of(&h.rec));
            }
            k
        });
        self.rec_history.retain(|_, pairs| {
            pairs.retain(|p| keep(p.round));
            !pairs.is_empty()
        });
        before - self.len()
    }

    /// Removes held recommendations for which `destroy` returns true, visiting
    /// them oldest first. Returns how many were removed.
    pub fn destroy_received(&mut self, mut destroy: impl FnMut(&Recommendation) -> bool) -> usize {
        let before = self.received.len();
        let index = &mut self.index;
        self.received.retain(|_, h| {
            let gone = destroy(&h.rec);
            if gone {
                index.remove(&key_of(&h.rec));
            }
            !gone
        });
        before - self.received.len()
    }

    fn enforce_capacity(&mut self) {
        while self.len() > self.capacity {
            let oldest_rec = self.received.keys().next().map(|k| k.0);
            let oldest_obs = self.observations.front().map(|o| o.round);
            match (oldest_rec, oldest_obs) {
                (Some(r), Some(o)) if o < r => {
                    self.observations.pop_front();
                }
                (Some(_), _) => {
                    if let Some((_, h)) = self.received.pop_first() {
                        self.index.remove(&key_of(&h.rec));
                    }
                }
                (None, Some(_)) => {
                    self.observations.pop_front();
                }
                (None, None) => break,
            }
        }
    }
}

fn key_of(rec: &Recommendation) -> RecKey {
    (
        rec.payload.observer.clone(),
        rec.payload.network.clone(),
        rec.payload.context,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(observer: &str, net: &str, rating: f64, round: u64) -> QoEObservation {
        QoEObservation {
            observer: observer.into(),
            network: net.into(),
            context: AppContext::Browsing,
            rating,
            round,
        }
    }

    fn rec(from: &str, net: &str, rating: f64, round: u64) -> Recommendation {
        Recommendation::new(obs(from, net, rating, round), KeyId(format!("key-{from}")))
    }

    #[test]
    fn record_into_empty_store() {
        let mut store = EvidenceStore::new(10);
        store.record_observation(obs("p", "n", 0.7, 0)).unwrap();
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn rating_out_of_range_rejected() {
        let mut store = EvidenceStore::new(10);
        let err = store.record_observation(obs("p", "n", 1.5, 0)).unwrap_err();
        assert_eq!(err, EvidenceError::RatingOutOfRange(1.5));
        assert!(store.is_empty());
        assert!(store.record_observation(obs("p", "n", -0.1, 0)).is_err());
    }

    #[test]
    fn capacity_evicts_lowest_weight_record() {
        let h = HalfLife::new(20).unwrap();
        let now = 109;
        let mut store = EvidenceStore::new(10);
        // Ten records, all roughly 100 rounds old, at distinct rounds.
        for i in 0..10u64 {
            store.record_observation(obs("p", "n", 0.5, i)).unwrap();
        }
        let before: Vec<(u64, f64)> = store
            .observations()
            .map(|o| (o.round, h.weight(now - o.round)))
            .collect();
        let argmin = before
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
            .0;
        store.record_observation(obs("p", "n", 0.5, now)).unwrap();
        assert_eq!(store.len(), 10);
        assert!(store.observations().all(|o| o.round != argmin));
        assert!(store.observations().any(|o| o.round == now));
    }

    #[test]
    fn capacity_prefers_evicting_received_on_equal_age() {
        let mut store = EvidenceStore::new(2);
        store.record_observation(obs("me", "n", 0.5, 3)).unwrap();
        store.ingest_recommendation(rec("r1", "n", 0.5, 3), VerificationVerdict::Verified);
        store.ingest_recommendation(rec("r2", "n", 0.5, 4), VerificationVerdict::Verified);
        assert_eq!(store.len(), 2);
        assert_eq!(store.observations().count(), 1);
        assert_eq!(store.received().next().unwrap().recommender().as_str(), "r2");
    }

    #[test]
    fn decayed_weight_table() {
        assert_eq!(decayed_weight(0, 20).unwrap(), 1.0);
        assert_eq!(decayed_weight(20, 20).unwrap(), 0.5);
        assert_eq!(decayed_weight(40, 20).unwrap(), 0.25);
        assert_eq!(decayed_weight(5, 0), Err(EvidenceError::ZeroHalfLife));
    }

    #[test]
    fn decayed_weight_never_zero() {
        let w = decayed_weight(u64::MAX, 1).unwrap();
        assert!(w > 0.0);
    }

    #[test]
    fn ingest_gates_on_verdict() {
        let mut store = EvidenceStore::new(10);
        assert_eq!(
            store.ingest_recommendation(rec("a", "n", 0.9, 0), VerificationVerdict::Verified),
            IngestOutcome::Stored
        );
        let out = store.ingest_recommendation(rec("b", "n", 0.9, 0), VerificationVerdict::SpoofRejected);
        assert_eq!(out, IngestOutcome::Rejected);
        assert!(!out.accepted());
        assert_eq!(store.received().count(), 1);
        assert_eq!(store.rejected_count(), 1);
    }

    #[test]
    fn newer_recommendation_supersedes_older() {
        let mut store = EvidenceStore::new(10);
        store.ingest_recommendation(rec("a", "n", 0.9, 1), VerificationVerdict::Verified);
        assert_eq!(
            store.ingest_recommendation(rec("a", "n", 0.1, 0), VerificationVerdict::Verified),
            IngestOutcome::Stale
        );
        assert_eq!(
            store.ingest_recommendation(rec("a", "n", 0.2, 2), VerificationVerdict::Verified),
            IngestOutcome::Stored
        );
        let held: Vec<f64> = store.received().map(|r| r.payload.rating).collect();
        assert_eq!(held, vec![0.2]);
    }

    #[test]
    fn old_rec_into_full_store_is_dropped() {
        let mut store = EvidenceStore::new(1);
        store.record_observation(obs("me", "n", 0.5, 5)).unwrap();
        assert_eq!(
            store.ingest_recommendation(rec("a", "n", 0.9, 1), VerificationVerdict::Verified),
            IngestOutcome::Dropped
        );
        assert_eq!(store.len(), 1);
        assert_eq!(store.received().count(), 0);
    }

    #[test]
    fn query_observations_weights() {
        let h = HalfLife::new(20).unwrap();
        let mut store = EvidenceStore::new(10);
        assert!(store
            .query_observations(&"n".into(), AppContext::Browsing, 0, h)
            .is_empty());
        store.record_observation(obs("me", "n", 0.6, 0)).unwrap();
        store.record_observation(obs("me", "n", 0.8, 20)).unwrap();
        store.record_observation(obs("me", "other", 0.1, 20)).unwrap();
        let got = store.query_observations(&"n".into(), AppContext::Browsing, 20, h);
        assert_eq!(got, vec![(0.6, 0.5), (0.8, 1.0)]);
        assert!(store
            .query_observations(&"n".into(), AppContext::Banking, 20, h)
            .is_empty());
    }

    #[test]
    fn prune_examples() {
        let h = HalfLife::new(10).unwrap();
        let mut empty = EvidenceStore::new(5);
        assert_eq!(empty.prune(100, 0.3, h), 0);

        let mut fresh = EvidenceStore::new(5);
        fresh.record_observation(obs("me", "n", 0.5, 7)).unwrap();
        fresh.ingest_recommendation(rec("a", "n", 0.5, 7), VerificationVerdict::Verified);
        assert_eq!(fresh.prune(7, 0.3, h), 0);

        let mut store = EvidenceStore::new(5);
        store.record_observation(obs("me", "n", 0.5, 0)).unwrap();
        store.record_observation(obs("me", "n", 0.5, 15)).unwrap();
        // age 20 = 2 half-lives -> 0.25 < 0.3
        assert_eq!(store.prune(20, 0.3, h), 1);
        assert!(store
            .observations()
            .all(|o| h.weight(20 - o.round) >= 0.3));
    }

    #[test]
    fn observation_scores_pending_recommendations_once() {
        let mut store = EvidenceStore::new(10);
        store.ingest_recommendation(rec("a", "n", 1.0, 0), VerificationVerdict::Verified);
        store.ingest_recommendation(rec("b", "m", 1.0, 0), VerificationVerdict::Verified);
        store.record_observation(obs("me", "n", 0.2, 1)).unwrap();
        store.record_observation(obs("me", "n", 0.3, 2)).unwrap();
        assert_eq!(
            store.history(&"a".into()),
            &[AgreementPair {
                recommended: 1.0,
                own: 0.2,
                round: 1
            }]
        );
        assert!(store.history(&"b".into()).is_empty());
    }

    #[test]
    fn wire_form_has_exactly_the_public_fields() {
        let r = rec("ps-1", "net-a", 0.75, 3).forwarded();
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"recommender_id":"ps-1","claimed_key":"key-ps-1","network_id":"net-a","context":"browsing","rating":0.75,"round":3,"hop_count":1}"#
        );
        let back: Recommendation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn wire_form_rejects_extra_fields_and_bad_ratings() {
        let extra = r#"{"recommender_id":"a","claimed_key":"k","network_id":"n","context":"gaming","rating":0.5,"round":0,"hop_count":0,"email":"x@y"}"#;
        assert!(serde_json::from_str::<Recommendation>(extra).is_err());
        let bad = r#"{"recommender_id":"a","claimed_key":"k","network_id":"n","context":"gaming","rating":2.0,"round":0,"hop_count":0}"#;
        assert!(serde_json::from_str::<Recommendation>(bad).is_err());
    }

    proptest! {
        #[test]
        fn halving_per_half_life(h in 1u32..500, frac in 0.0f64..1.0) {
            let age = (frac * 1000.0 * f64::from(h)) as u64;
            let hl = HalfLife::new(h).unwrap();
            let a = hl.weight(age);
            let b = hl.weight(age + u64::from(h));
            prop_assert!(a > 0.0 && a <= 1.0);
            prop_assert_eq!(b, a / 2.0);
            prop_assert!(hl.weight(age + 1) < a);
        }

        #[test]
        fn store_never_exceeds_capacity(
            cap in 1usize..20,
            ops in proptest::collection::vec((0u8..3, 0u64..50, 0.0f64..=1.0, 0u8..4), 0..120),
        ) {
            let mut store = EvidenceStore::new(cap);
            for (kind, round, rating, who) in ops {
                match kind {
                    0 => { store.record_observation(obs("me", "n", rating, round)).unwrap(); }
                    1 => { store.ingest_recommendation(rec(&format!("r{who}"), "n", rating, round), VerificationVerdict::Verified); }
                    _ => { store.prune(round, 0.05, HalfLife::new(5).unwrap()); }
                }
                prop_assert!(store.len() <= cap);
                prop_assert!(store.observations().all(|o| (0.0..=1.0).contains(&o.rating)));
            }
        }

        #[test]
        fn ingest_accepts_exactly_verified(spoofed in any::<bool>(), compromised in any::<bool>(), round in 0u64..10) {
            // Verdicts come from the key registry: a spoofed signature is
            // rejected, a compromised key still verifies.
            let mut registry = crate::simnet::KeyRegistry::default();
            registry.register(KeyId::from("key-a"), PseudonymId::from("a"));
            if compromised {
                registry.mark_compromised(&PseudonymId::from("a"));
            }
            let mut r = rec("a", "n", 0.5, round);
            if spoofed {
                r.claimed_key = KeyId::from("forged");
            }
            let verdict = crate::simnet::verify_message(&r, &registry);
            let mut store = EvidenceStore::new(4);
            let out = store.ingest_recommendation(r, verdict);
            prop_assert_eq!(out.accepted(), !spoofed);
            prop_assert_eq!(store.received().count(), usize::from(!spoofed));
        }
    }
}
