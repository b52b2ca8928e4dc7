//! Trust engine for reputation-based network selection.
//!
//! Mobile users share quality-of-experience (QoE) ratings of the networks they
//! use. Each peer runs a local trust engine that weighs its own observations,
//! recommendations from other pseudonyms, and manually declared friends, then
//! picks a network through a per-application risk threshold.
//!
//! The crate also contains a deterministic round-based P2P simulator with a
//! pluggable adversary harness (sybils, spoofing, compromised keys, evidence
//! destruction, SSID imitation, whitewashing) and a scenario runner that turns
//! a JSON configuration into a JSON metrics stream.
//!
//! Module map:
//! - [`evidence`]: identities, observations, recommendations, evidence store.
//! - [`trust`]: direct trust, recommender trust, capped reputation, blending.
//! - [`risk`]: context thresholds, decisions, expected-vs-actual outcome log.
//! - [`selection`]: cost-aware scoring and deterministic network choice.
//! - [`simnet`]: the simulated world and its round loop.
//! - [`attack`]: adversary strategies.
//! - [`scenario`]: config loading, runs, sweeps and metrics output.

pub mod attack;
pub mod evidence;
pub mod risk;
pub mod scenario;
pub mod selection;
pub mod simnet;
pub mod trust;

pub use evidence::{
    decayed_weight, AppContext, EvidenceError, EvidenceStore, HalfLife, KeyId, NetworkId,
    NetworkIdentity, ProviderId, Pseudonym, PseudonymId, QoEObservation, Recommendation,
};
pub use risk::{Decision, OutcomeLog, OutcomeRecord, RiskRequest, RiskTable, Verdict};
pub use scenario::{MetricsSeries, ScenarioConfig};
pub use selection::{Candidate, Selection};
pub use simnet::{RoundReport, World};
pub use trust::{FriendMap, MetricParams, TrustAssessment};
