//! Trust value computation.
//!
//! Three beta-style assessments feed network selection:
//! - direct trust in a network from own decayed QoE ratings,
//! - recommender trust from how well a recommender's ratings matched own
//!   later experience,
//! - reputation, a recommender-weighted mean of shared ratings where the
//!   combined weight of non-friends is capped so that minting pseudonyms
//!   cannot buy unbounded influence.
//!
//! All functions here are pure.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::evidence::{EvidenceError, HalfLife, PseudonymId};

/// A trust estimate with the confidence carried by its evidence.
///
/// `value` is in [0, 1]; `confidence` is in [0, 1) and is zero exactly when
/// no evidence contributed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrustAssessment {
    pub value: f64,
    pub confidence: f64,
}

impl TrustAssessment {
    /// Neutral estimate with no supporting evidence.
    pub const UNINFORMED: TrustAssessment = TrustAssessment {
        value: 0.5,
        confidence: 0.0,
    };
}

/// Manually declared friends and the trust given to each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FriendMap {
    entries: BTreeMap<PseudonymId, f64>,
}

impl FriendMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets a friend weight, clamped into [0, 1].
    pub fn insert(&mut self, id: PseudonymId, weight: f64) {
        self.entries.insert(id, weight.clamp(0.0, 1.0));
    }

    pub fn remove(&mut self, id: &PseudonymId) -> Option<f64> {
        self.entries.remove(id)
    }

    pub fn get(&self, id: &PseudonymId) -> Option<f64> {
        self.entries.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PseudonymId, f64)> {
        self.entries.iter().map(|(k, v)| (k, *v))
    }
}

fn default_half_life() -> u32 {
    20
}
fn default_prior_pos() -> f64 {
    1.0
}
fn default_prior_neg() -> f64 {
    3.0
}
fn default_cap() -> Option<f64> {
    Some(5.0)
}
fn default_floor() -> f64 {
    0.2
}

/// Tunables of the trust metric.
///
/// `sybil_cap: null` in a config disables the cap; an absent key means the
/// default of 5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricParams {
    #[serde(default = "default_half_life")]
    pub half_life: u32,
    #[serde(default = "default_prior_pos")]
    pub rec_prior_pos: f64,
    #[serde(default = "default_prior_neg")]
    pub rec_prior_neg: f64,
    #[serde(default = "default_cap")]
    pub sybil_cap: Option<f64>,
    /// Assessments whose direct and reputation confidence both fall below
    /// this are flagged as low-confidence in the metrics stream.
    #[serde(default = "default_floor")]
    pub confidence_floor: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            half_life: default_half_life(),
            rec_prior_pos: default_prior_pos(),
            rec_prior_neg: default_prior_neg(),
            sybil_cap: default_cap(),
            confidence_floor: default_floor(),
        }
    }
}

impl MetricParams {
    pub fn half_life(&self) -> Result<HalfLife, EvidenceError> {
        HalfLife::new(self.half_life)
    }

    /// Trust in a recommender with no agreement history.
    pub fn newcomer_prior(&self) -> TrustAssessment {
        recommender_trust(&[], self)
    }
}

/// Direct trust in a network from `(rating, weight)` pairs.
pub fn direct_trust(weighted_obs: &[(f64, f64)]) -> TrustAssessment {
    // alpha + beta is the plain weight sum, so confidence never depends on
    // the ratings themselves.
    let (pos, total) = weighted_obs
        .iter()
        .fold((0.0, 0.0), |(a, t), &(r, w)| (a + w * r, t + w));
    TrustAssessment {
        value: (pos + 1.0) / (total + 2.0),
        confidence: total / (total + 2.0),
    }
}

/// Trust in a recommender from `(recommended, own, weight)` triples.
///
/// Each pair contributes accuracy `1 - |recommended - own|`. The prior
/// `(rec_prior_pos, rec_prior_neg)` sits below neutral by default, so a fresh
/// pseudonym starts out less trusted than an average one.
pub fn recommender_trust(pairs: &[(f64, f64, f64)], params: &MetricParams) -> TrustAssessment {
    let (pos, total) = pairs.iter().fold((0.0, 0.0), |(a, t), &(rec, own, w)| {
        (a + w * (1.0 - (rec - own).abs()), t + w)
    });
    let (a0, b0) = (params.rec_prior_pos, params.rec_prior_neg);
    TrustAssessment {
        value: (pos + a0) / (total + a0 + b0),
        confidence: total / (total + a0 + b0),
    }
}

/// One shared rating entering reputation aggregation.
#[derive(Debug, Clone, Copy)]
pub struct WeightedRating<'a> {
    pub rating: f64,
    pub recommender: &'a PseudonymId,
    pub decay: f64,
}

/// Aggregates shared ratings into a reputation assessment.
///
/// Raw weight of a rating is `decay * max(recommender trust, friend weight)`.
/// Non-friend raw weights are scaled down together so their sum never exceeds
/// `sybil_cap`; friends are exempt. Recommenders missing from `rec_trusts`
/// get the newcomer prior.
pub fn aggregate_reputation(
    recs: &[WeightedRating<'_>],
    rec_trusts: &BTreeMap<PseudonymId, TrustAssessment>,
    friends: &FriendMap,
    params: &MetricParams,
) -> TrustAssessment {
    let prior = params.newcomer_prior().value;
    let (mut friend_w, mut friend_wr) = (0.0, 0.0);
    let (mut pool_w, mut pool_wr) = (0.0, 0.0);
    for r in recs {
        let trust = rec_trusts
            .get(r.recommender)
            .map_or(prior, |t| t.value);
        match friends.get(r.recommender) {
            Some(f) => {
                let w = r.decay * trust.max(f);
                friend_w += w;
                friend_wr += w * r.rating;
            }
            None => {
                let w = r.decay * trust;
                pool_w += w;
                pool_wr += w * r.rating;
            }
        }
    }
    if let Some(cap) = params.sybil_cap {
        if pool_w > cap {
            let scale = cap / pool_w;
            pool_w = cap;
            pool_wr *= scale;
        }
    }
    let total_w = friend_w + pool_w;
    if total_w <= 0.0 {
        return TrustAssessment::UNINFORMED;
    }
    TrustAssessment {
        value: ((friend_wr + pool_wr) / total_w).clamp(0.0, 1.0),
        confidence: total_w / (total_w + 2.0),
    }
}

/// Blends direct trust with reputation, weighting direct trust by its own
/// confidence. Without direct evidence the reputation value is used as is.
pub fn combined_trust(direct: TrustAssessment, reputation: TrustAssessment) -> f64 {
    if direct.confidence == 0.0 {
        return reputation.value;
    }
    let c = direct.confidence;
    c * direct.value + (1.0 - c) * reputation.value
}
