use std::collections::BTreeMap;

use crate::evidence::{AppContext, HalfLife, NetworkId};
use crate::trust::{
    aggregate_reputation, combined_trust, direct_trust, recommender_trust, MetricParams,
    TrustAssessment, WeightedRating,
};

use super::{GroundTruthNetwork, PeerState};

/// One peer's view of one network in one context.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkAssessment {
    pub network: NetworkId,
    pub direct: TrustAssessment,
    pub reputation: TrustAssessment,
    pub combined: f64,
}

impl NetworkAssessment {
    pub fn low_confidence(&self, floor: f64) -> bool {
        self.direct.confidence.max(self.reputation.confidence) < floor
    }
}

/// Runs the local trust engine of `peer` over every visible network.
pub fn assess_networks(
    peer: &PeerState,
    networks: &[GroundTruthNetwork],
    context: AppContext,
    now: u64,
    params: &MetricParams,
    half_life: HalfLife,
) -> Vec<NetworkAssessment> {
    let mut rec_trusts = BTreeMap::new();
    networks
        .iter()
        .map(|n| {
            let id = n.id();
            let direct = direct_trust(&peer.store.query_observations(id, context, now, half_life));
            let recs: Vec<WeightedRating<'_>> = peer
                .store
                .query_recommendations(id, context, now, half_life)
                .into_iter()
                .map(|(rating, recommender, decay)| WeightedRating {
                    rating,
                    recommender,
                    decay,
                })
                .collect();
            for r in &recs {
                if !rec_trusts.contains_key(r.recommender) {
                    let pairs = peer.store.recommender_pairs(r.recommender, now, half_life);
                    rec_trusts.insert(r.recommender.clone(), recommender_trust(&pairs, params));
                }
            }
            let reputation = aggregate_reputation(&recs, &rec_trusts, &peer.friends, params);
            NetworkAssessment {
                network: id.clone(),
                direct,
                reputation,
                combined: combined_trust(direct, reputation),
            }
        })
        .collect()
}
