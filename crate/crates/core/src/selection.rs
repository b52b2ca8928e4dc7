//! Automated network selection over risk-filtered candidates.

use crate::evidence::{NetworkId, NetworkIdentity};
use crate::risk::Decision;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub network: NetworkIdentity,
    /// Combined trust in [0, 1].
    pub trust: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Network(NetworkId),
    NoneAcceptable,
}

impl Selection {
    pub fn network(&self) -> Option<&NetworkId> {
        match self {
            Selection::Network(id) => Some(id),
            Selection::NoneAcceptable => None,
        }
    }
}

/// Trust penalized by price. May be negative; only the ordering matters.
pub fn score(trust: f64, cost: f64, lambda: f64) -> f64 {
    trust - lambda * cost
}

/// Highest score wins; equal scores go to the smaller id.
pub fn pick<'a>(scored: impl IntoIterator<Item = (f64, &'a NetworkId)>) -> Option<&'a NetworkId> {
    scored
        .into_iter()
        .fold(None, |best: Option<(f64, &NetworkId)>, (s, id)| match best {
            Some((bs, bid)) if bs > s || (bs == s && bid <= id) => Some((bs, bid)),
            _ => Some((s, id)),
        })
        .map(|(_, id)| id)
}

/// Picks the best Granted candidate. Denied candidates are never chosen.
pub fn select(candidates: &[Candidate], lambda: f64) -> Selection {
    pick(
        candidates
            .iter()
            .filter(|c| c.decision.granted())
            .map(|c| (score(c.trust, c.network.cost, lambda), &c.network.authentic_id)),
    )
    .map_or(Selection::NoneAcceptable, |id| Selection::Network(id.clone()))
}
