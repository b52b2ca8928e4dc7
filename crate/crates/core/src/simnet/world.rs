use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};

use crate::attack::{AttackError, AttackSpec, AttackState};
use crate::evidence::{
    AppContext, EvidenceError, HalfLife, IngestOutcome, KeyId, NetworkId, Pseudonym, PseudonymId,
    QoEObservation, Recommendation,
};
use crate::risk::{decide, OutcomeRecord, RiskRequest, RiskTable};
use crate::selection::{select, Candidate, Selection};
use crate::trust::MetricParams;

use super::report::{NetworkReport, RoundReport, SessionReport};
use super::{
    assess_networks, attribute_network, gossip, sample_qoe, support_peer_serve, verify_message,
    GroundTruthNetwork, KeyRegistry, PeerState, Role, SimRng,
};

/// Everything the round loop needs besides the population.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub params: MetricParams,
    pub risk: RiskTable,
    pub lambda: f64,
    pub p_mislead: f64,
    pub noise_sigma: f64,
    pub contexts: Vec<AppContext>,
    pub fanout_budget: usize,
    pub relay_budget: usize,
    pub max_hops: u32,
    pub neighbor_sample: Option<usize>,
    pub explore_epsilon: f64,
    pub prune_min_weight: f64,
    pub misprediction_window: usize,
    pub capacity: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            params: MetricParams::default(),
            risk: RiskTable::default(),
            lambda: 0.0,
            p_mislead: 0.0,
            noise_sigma: 0.05,
            contexts: vec![AppContext::Browsing],
            fanout_budget: 1,
            relay_budget: 2,
            max_hops: 2,
            neighbor_sample: None,
            explore_epsilon: 0.0,
            prune_min_weight: 0.01,
            misprediction_window: 10,
            capacity: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Gossip,
    Attack(usize),
    Support,
}

/// A recommendation in flight.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub to: PseudonymId,
    pub rec: Recommendation,
    pub origin: Origin,
}

/// The simulated world. Peers are kept sorted by pseudonym id.
#[derive(Debug)]
pub struct World {
    settings: SimSettings,
    half_life: HalfLife,
    peers: Vec<PeerState>,
    networks: Vec<GroundTruthNetwork>,
    registry: KeyRegistry,
    round: u64,
    rng: SimRng,
    attacks: Vec<AttackState>,
    next_key: u64,
    next_id: BTreeMap<String, u64>,
    audit: Option<Vec<Recommendation>>,
}

impl World {
    pub fn new(
        settings: SimSettings,
        mut networks: Vec<GroundTruthNetwork>,
        seed: u64,
    ) -> Result<Self, EvidenceError> {
        let half_life = settings.params.half_life()?;
        networks.sort_by(|a, b| a.id().cmp(b.id()));
        Ok(Self {
            settings,
            half_life,
            peers: Vec::new(),
            networks,
            registry: KeyRegistry::default(),
            round: 0,
            rng: SimRng::seed_from_u64(seed),
            attacks: Vec::new(),
            next_key: 0,
            next_id: BTreeMap::new(),
            audit: None,
        })
    }

    pub fn settings(&self) -> &SimSettings {
        &self.settings
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn half_life(&self) -> HalfLife {
        self.half_life
    }

    pub fn peers(&self) -> &[PeerState] {
        &self.peers
    }

    pub fn peers_with_role(&self, role: Role) -> impl Iterator<Item = &PeerState> {
        self.peers.iter().filter(move |p| p.role == role)
    }

    pub fn peer(&self, id: &PseudonymId) -> Option<&PeerState> {
        self.index_of(id).map(|i| &self.peers[i])
    }

    pub fn peer_mut(&mut self, id: &PseudonymId) -> Option<&mut PeerState> {
        self.index_of(id).map(move |i| &mut self.peers[i])
    }

    pub fn networks(&self) -> &[GroundTruthNetwork] {
        &self.networks
    }

    pub fn network(&self, id: &NetworkId) -> Option<&GroundTruthNetwork> {
        self.networks.iter().find(|n| n.id() == id)
    }

    pub fn network_mut(&mut self, id: &NetworkId) -> Option<&mut GroundTruthNetwork> {
        self.networks.iter_mut().find(|n| n.id() == id)
    }

    pub fn registry(&self) -> &KeyRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut KeyRegistry {
        &mut self.registry
    }

    pub fn rng_mut(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    fn index_of(&self, id: &PseudonymId) -> Option<usize> {
        self.peers.binary_search_by(|p| p.id().cmp(id)).ok()
    }

    /// Mints a fresh pseudonym `<prefix><nnnn>` with a newly registered key.
    pub fn mint_pseudonym(&mut self, prefix: &str) -> Pseudonym {
        let n = self.next_id.entry(prefix.to_owned()).or_insert(0);
        let id = PseudonymId(format!("{prefix}{n:04}"));
        *n += 1;
        let key = KeyId(format!("k{:06}", self.next_key));
        self.next_key += 1;
        self.registry.register(key.clone(), id.clone());
        Pseudonym::new(id, key)
    }

    /// Creates and inserts a peer with a fresh pseudonym.
    pub fn add_peer(&mut self, prefix: &str, role: Role) -> PseudonymId {
        let pseudonym = self.mint_pseudonym(prefix);
        let id = pseudonym.id().clone();
        self.insert_peer(PeerState::new(pseudonym, role, self.settings.capacity));
        id
    }

    pub fn insert_peer(&mut self, peer: PeerState) {
        let at = self
            .peers
            .binary_search_by(|p| p.id().cmp(peer.id()))
            .unwrap_or_else(|e| e);
        self.peers.insert(at, peer);
    }

    /// Removes a peer and every neighbor edge pointing at it.
    pub fn remove_peer(&mut self, id: &PseudonymId) -> Option<PeerState> {
        let idx = self.index_of(id)?;
        let gone = self.peers.remove(idx);
        for p in &mut self.peers {
            p.neighbors.retain(|n| n != id);
        }
        Some(gone)
    }

    /// Undirected edge.
    pub fn connect(&mut self, a: &PseudonymId, b: &PseudonymId) {
        if a == b {
            return;
        }
        for (from, to) in [(a, b), (b, a)] {
            if let Some(p) = self.peer_mut(from) {
                if !p.neighbors.contains(to) {
                    p.neighbors.push(to.clone());
                    p.neighbors.sort();
                }
            }
        }
    }

    pub fn install_attack(&mut self, spec: &AttackSpec) -> Result<(), AttackError> {
        let state = AttackState::install(self, spec)?;
        self.attacks.push(state);
        Ok(())
    }

    /// Starts recording every recommendation put on the wire.
    pub fn enable_audit(&mut self) {
        self.audit = Some(Vec::new());
    }

    pub fn audit_log(&self) -> Option<&[Recommendation]> {
        self.audit.as_deref()
    }

    /// Destroys each rec hosted by `support` with probability `fraction`,
    /// one uniform draw per hosted rec, oldest first.
    pub fn deny_on(&mut self, support: &PseudonymId, fraction: f64) -> usize {
        let Some(idx) = self.index_of(support) else {
            return 0;
        };
        crate::attack::deny_evidence(&mut self.peers[idx], fraction, &mut self.rng)
    }

    /// Advances the world by one round.
    pub fn step_round(&mut self) -> RoundReport {
        let now = self.round;
        let mut report = RoundReport::empty(now);
        let mut attacks = std::mem::take(&mut self.attacks);

        for a in &mut attacks {
            a.begin_round(self);
        }

        self.run_sessions(now, &mut report, &mut attacks);
        self.run_gossip(now, &mut report, &mut attacks);

        report.support.hosted_before_denial = self
            .peers_with_role(Role::Support)
            .map(|p| p.store.received().count() as u64)
            .sum();
        for a in &mut attacks {
            report.support.destroyed += a.after_gossip(self);
        }
        self.sync_support(&mut report);

        let min_w = self.settings.prune_min_weight;
        let hl = self.half_life;
        report.pruned = self
            .peers
            .iter_mut()
            .map(|p| p.store.prune(now, min_w, hl) as u64)
            .sum();

        let window = self.settings.misprediction_window;
        let default_ctx = self.settings.contexts[0];
        let rates: Vec<f64> = self
            .peers_with_role(Role::Honest)
            .map(|p| {
                p.outcome_log
                    .misprediction_rate(p.last_context.unwrap_or(default_ctx), window)
            })
            .collect();
        if !rates.is_empty() {
            report.mean_misprediction = rates.iter().sum::<f64>() / rates.len() as f64;
        }

        report.attacks = attacks.iter_mut().map(AttackState::take_report).collect();
        self.attacks = attacks;
        self.round += 1;
        report
    }

    fn run_sessions(&mut self, now: u64, report: &mut RoundReport, attacks: &mut [AttackState]) {
        let n_nets = self.networks.len();
        let mut trust_sum = vec![0.0; n_nets];
        let mut error_sum = vec![0.0; n_nets];
        let mut selected = vec![0u64; n_nets];
        let mut honest = 0usize;

        for idx in 0..self.peers.len() {
            if self.peers[idx].role != Role::Honest {
                continue;
            }
            honest += 1;
            let contexts = &self.settings.contexts;
            let context = if contexts.len() == 1 {
                contexts[0]
            } else {
                contexts[self.rng.random_range(0..contexts.len())]
            };
            let assessments = assess_networks(
                &self.peers[idx],
                &self.networks,
                context,
                now,
                &self.settings.params,
                self.half_life,
            );
            let mut candidates = Vec::with_capacity(n_nets);
            for (i, (a, n)) in assessments.iter().zip(&self.networks).enumerate() {
                trust_sum[i] += a.combined;
                error_sum[i] += (a.combined - n.true_quality).abs();
                let req = RiskRequest {
                    network: a.network.clone(),
                    context,
                    trust: a.combined,
                };
                // Config loading guarantees a complete table.
                let decision = decide(&req, &self.settings.risk)
                    .expect("risk table covers every context");
                candidates.push(Candidate {
                    network: n.identity.clone(),
                    trust: a.combined,
                    decision,
                });
            }
            let mut choice = select(&candidates, self.settings.lambda);
            if self.settings.explore_epsilon > 0.0
                && self.rng.random::<f64>() < self.settings.explore_epsilon
            {
                let granted: Vec<&Candidate> =
                    candidates.iter().filter(|c| c.decision.granted()).collect();
                if !granted.is_empty() {
                    let pick = granted[self.rng.random_range(0..granted.len())];
                    choice = Selection::Network(pick.network.authentic_id.clone());
                }
            }
            let granted = candidates.iter().filter(|c| c.decision.granted()).count();

            let peer_id = self.peers[idx].id().clone();
            self.peers[idx].last_context = Some(context);
            let Selection::Network(net_id) = choice else {
                report.sessions.push(SessionReport {
                    peer: peer_id,
                    context,
                    network: None,
                    trust: None,
                    margin: None,
                    granted,
                    qoe: None,
                    attributed: None,
                    low_confidence: false,
                });
                continue;
            };
            let ni = self
                .networks
                .iter()
                .position(|n| n.id() == &net_id)
                .expect("selected network exists");
            selected[ni] += 1;
            let chosen = &candidates[ni];
            let trust = chosen.trust;
            let margin = chosen.decision.margin;
            let low_confidence =
                assessments[ni].low_confidence(self.settings.params.confidence_floor);

            let net = &self.networks[ni];
            let attributed = attribute_network(
                &net.beacon_name,
                net.id(),
                &self.networks,
                self.settings.p_mislead,
                &mut self.rng,
            );
            let qoe = sample_qoe(
                net.true_quality,
                self.peers[idx].taste_offset,
                self.settings.noise_sigma,
                &mut self.rng,
            );
            let peer = &mut self.peers[idx];
            peer.store
                .record_observation(QoEObservation {
                    observer: peer_id.clone(),
                    network: attributed.clone(),
                    context,
                    rating: qoe,
                    round: now,
                })
                .expect("sampled rating is clamped");
            peer.outcome_log
                .record_outcome(OutcomeRecord {
                    expected: trust,
                    actual: qoe,
                    context,
                    round: now,
                })
                .expect("trust and rating are in range");
            for a in attacks.iter_mut() {
                a.on_session(now, &net_id, &attributed);
            }
            report.sessions.push(SessionReport {
                peer: peer_id,
                context,
                network: Some(net_id),
                trust: Some(trust),
                margin: Some(margin),
                granted,
                qoe: Some(qoe),
                attributed: Some(attributed),
                low_confidence,
            });
        }

        report.networks = self
            .networks
            .iter()
            .enumerate()
            .map(|(i, n)| NetworkReport {
                id: n.id().clone(),
                beacon: n.beacon_name.clone(),
                true_quality: n.true_quality,
                mean_trust: (honest > 0).then(|| trust_sum[i] / honest as f64),
                mean_abs_error: (honest > 0).then(|| error_sum[i] / honest as f64),
                selected: selected[i],
            })
            .collect();
    }

    fn run_gossip(&mut self, _now: u64, report: &mut RoundReport, attacks: &mut [AttackState]) {
        let s = &self.settings;
        let (fanout, relay, max_hops, sample) =
            (s.fanout_budget, s.relay_budget, s.max_hops, s.neighbor_sample);
        let mut outbox: Vec<Envelope> = Vec::new();
        for idx in 0..self.peers.len() {
            if self.peers[idx].role != Role::Honest {
                continue;
            }
            let peer = &mut self.peers[idx];
            for (to, rec) in gossip(peer, fanout, relay, max_hops, sample, &mut self.rng) {
                if rec.hop_count > 0 {
                    report.messages.relayed += 1;
                }
                outbox.push(Envelope {
                    to,
                    rec,
                    origin: Origin::Gossip,
                });
            }
        }
        for (i, a) in attacks.iter_mut().enumerate() {
            for mut env in a.emit(self) {
                env.origin = Origin::Attack(i);
                outbox.push(env);
            }
        }
        for env in outbox {
            report.messages.sent += 1;
            let Some(outcome) = self.deliver(&env, true) else {
                continue;
            };
            match outcome {
                IngestOutcome::Rejected => {
                    report.messages.rejected_spoofs += 1;
                    if let Origin::Attack(i) = env.origin {
                        attacks[i].on_rejected();
                    }
                }
                IngestOutcome::Stored => {
                    report.messages.accepted += 1;
                    report.messages.stored += 1;
                }
                IngestOutcome::Stale | IngestOutcome::Dropped => {
                    report.messages.accepted += 1;
                }
            }
        }
    }

    /// Verifies and ingests one message. `None` if the recipient is gone, is
    /// attacker-controlled, or is the recommender itself.
    fn deliver(&mut self, env: &Envelope, relay: bool) -> Option<IngestOutcome> {
        if let Some(log) = &mut self.audit {
            log.push(env.rec.clone());
        }
        let idx = self.index_of(&env.to)?;
        let max_hops = self.settings.max_hops;
        let verdict = verify_message(&env.rec, &self.registry);
        let peer = &mut self.peers[idx];
        if peer.role == Role::Attacker || env.rec.recommender() == peer.id() {
            return None;
        }
        let outcome = peer.store.ingest_recommendation(env.rec.clone(), verdict);
        if relay
            && outcome == IngestOutcome::Stored
            && peer.role == Role::Honest
            && env.rec.hop_count < max_hops
        {
            peer.relay_queue.push(env.rec.clone());
        }
        Some(outcome)
    }

    fn sync_support(&mut self, report: &mut RoundReport) {
        let supports: Vec<usize> = (0..self.peers.len())
            .filter(|&i| self.peers[i].role == Role::Support)
            .collect();
        if supports.is_empty() {
            return;
        }
        let default_ctx = self.settings.contexts[0];
        for idx in 0..self.peers.len() {
            if self.peers[idx].role != Role::Honest {
                continue;
            }
            let to = self.peers[idx].id().clone();
            let context = self.peers[idx].last_context.unwrap_or(default_ctx);
            for &s in &supports {
                for n in 0..self.networks.len() {
                    let served =
                        support_peer_serve(&self.peers[s], self.networks[n].id(), context);
                    report.support.served += served.len() as u64;
                    for rec in served {
                        let env = Envelope {
                            to: to.clone(),
                            rec,
                            origin: Origin::Support,
                        };
                        if self.deliver(&env, false) == Some(IngestOutcome::Rejected) {
                            report.messages.rejected_spoofs += 1;
                        }
                    }
                }
            }
        }
    }
}
