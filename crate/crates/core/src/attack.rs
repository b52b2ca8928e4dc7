//! Adversary strategies.
//!
//! Each [`AttackSpec`] kind maps onto one entry of the attack taxonomy (see
//! [`AttackSpec::taxonomy`]). Installed attacks become [`AttackState`]s that
//! the world drives synchronously inside every round and that report their own
//! counters.
//!
//! Attacker payloads are constants: 1.0 to promote, 0.0 to demote.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{
    AppContext, KeyId, NetworkId, ProviderId, Pseudonym, PseudonymId, QoEObservation,
    Recommendation,
};
use crate::simnet::{
    AttackReport, Envelope, GroundTruthNetwork, KeyRegistry, Origin, PeerState, Role, SimRng,
    World,
};

#[derive(Debug, Error, PartialEq)]
pub enum AttackError {
    #[error("unknown pseudonym `{0}`")]
    UnknownPseudonym(PseudonymId),
    #[error("unknown network `{0}`")]
    UnknownNetwork(NetworkId),
    #[error("pseudonym `{0}` is not attacker-controlled")]
    NotAttacker(PseudonymId),
    #[error("pseudonym `{0}` is not a support peer")]
    NotSupport(PseudonymId),
    #[error("no other network advertises the name `{0}`")]
    NoImitationTarget(String),
    #[error("key `{key}` is registered to `{victim}`; use compromise instead")]
    KeyBelongsToVictim { key: KeyId, victim: PseudonymId },
    #[error("coalition has no members")]
    EmptyCoalition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Promote,
    Demote,
}

impl Direction {
    pub fn rating(self) -> f64 {
        match self {
            Direction::Promote => 1.0,
            Direction::Demote => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SybilFloodParams {
    pub count: usize,
    /// Provider that mints and controls the sybils.
    pub controller: ProviderId,
    pub target: NetworkId,
    #[serde(default)]
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollusionParams {
    pub target: NetworkId,
    #[serde(default)]
    pub direction: Direction,
    /// Attacker-controlled end-user pseudonyms. Empty means every configured
    /// attacker peer.
    #[serde(default)]
    pub members: Vec<PseudonymId>,
    /// Network providers taking part.
    #[serde(default)]
    pub providers: Vec<ProviderId>,
}

fn default_per_round() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpoofParams {
    #[serde(default = "default_per_round")]
    pub per_round: usize,
    /// Impersonated pseudonym. Defaults to the first honest peer.
    #[serde(default)]
    pub victim: Option<PseudonymId>,
    pub target: NetworkId,
    #[serde(default)]
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompromiseParams {
    pub victim: PseudonymId,
    pub target: NetworkId,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub from_round: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenialParams {
    pub fraction: f64,
    /// Support peers under attack. Empty means all of them.
    #[serde(default)]
    pub support_peers: Vec<PseudonymId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsidSpoofParams {
    /// The bad network that imitates another one's name.
    pub network: NetworkId,
    pub imitated_name: String,
}

/// Build reputation with `q_build`, then serve `q_betray` from
/// `switch_round` on (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhitewashNetworkParams {
    pub network: NetworkId,
    pub q_build: f64,
    pub q_betray: f64,
    pub switch_round: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RejoinParams {
    /// Attacker peer that plays honest recommender, then lies, then sheds its
    /// pseudonym.
    pub peer: PseudonymId,
    pub target: NetworkId,
    #[serde(default)]
    pub direction: Direction,
    pub betray_round: u64,
    /// Rejoin every this many rounds once betraying; 0 never rejoins.
    pub rejoin_every: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    SybilFlood(SybilFloodParams),
    BadmouthCollusion(CollusionParams),
    Spoof(SpoofParams),
    Compromise(CompromiseParams),
    EvidenceDenial(DenialParams),
    SsidSpoof(SsidSpoofParams),
    WhitewashNetwork(WhitewashNetworkParams),
    WhitewashRejoin(RejoinParams),
}

impl AttackSpec {
    pub const KINDS: [&'static str; 8] = [
        "sybil_flood",
        "badmouth_collusion",
        "spoof",
        "compromise",
        "evidence_denial",
        "ssid_spoof",
        "whitewash_network",
        "whitewash_rejoin",
    ];

    pub fn kind(&self) -> &'static str {
        match self {
            AttackSpec::SybilFlood(_) => "sybil_flood",
            AttackSpec::BadmouthCollusion(_) => "badmouth_collusion",
            AttackSpec::Spoof(_) => "spoof",
            AttackSpec::Compromise(_) => "compromise",
            AttackSpec::EvidenceDenial(_) => "evidence_denial",
            AttackSpec::SsidSpoof(_) => "ssid_spoof",
            AttackSpec::WhitewashNetwork(_) => "whitewash_network",
            AttackSpec::WhitewashRejoin(_) => "whitewash_rejoin",
        }
    }

    /// The threat this kind models.
    pub fn taxonomy(&self) -> &'static str {
        match self {
            AttackSpec::SybilFlood(_) => {
                "false QoE evidence from many pseudonyms created by one entity"
            }
            AttackSpec::BadmouthCollusion(_) => {
                "coalition of end-users and network providers driving a reputation"
            }
            AttackSpec::Spoof(_) => "false QoE evidence under spoofed pseudonyms",
            AttackSpec::Compromise(_) => {
                "false QoE evidence under compromised legitimate pseudonyms"
            }
            AttackSpec::EvidenceDenial(_) => "destruction or denial of reputation evidence",
            AttackSpec::SsidSpoof(_) => "social engineering through a misleading SSID",
            AttackSpec::WhitewashNetwork(_) => {
                "whitewashing: build reputation, then behave badly"
            }
            AttackSpec::WhitewashRejoin(_) => {
                "whitewashing: rejoin under a fresh pseudonym"
            }
        }
    }

    /// Networks this attack works for.
    pub fn beneficiaries(&self, networks: &[GroundTruthNetwork]) -> BTreeSet<NetworkId> {
        let promoted = |target: &NetworkId, d: Direction| {
            (d == Direction::Promote).then(|| target.clone())
        };
        let of_providers = |providers: &[&ProviderId]| -> Vec<NetworkId> {
            networks
                .iter()
                .filter(|n| providers.contains(&&n.identity.provider_id))
                .map(|n| n.id().clone())
                .collect()
        };
        let mut out = BTreeSet::new();
        match self {
            AttackSpec::SybilFlood(p) => {
                out.extend(promoted(&p.target, p.direction));
                out.extend(of_providers(&[&p.controller]));
            }
            AttackSpec::BadmouthCollusion(p) => {
                out.extend(promoted(&p.target, p.direction));
                out.extend(of_providers(&p.providers.iter().collect::<Vec<_>>()));
            }
            AttackSpec::Spoof(SpoofParams {
                target, direction, ..
            })
            | AttackSpec::Compromise(CompromiseParams {
                target, direction, ..
            })
            | AttackSpec::WhitewashRejoin(RejoinParams {
                target, direction, ..
            }) => out.extend(promoted(target, *direction)),
            AttackSpec::EvidenceDenial(_) => {}
            AttackSpec::SsidSpoof(p) => {
                out.insert(p.network.clone());
            }
            AttackSpec::WhitewashNetwork(p) => {
                out.insert(p.network.clone());
            }
        }
        out
    }
}

/// A coalition and what it wants.
#[derive(Debug, Clone, PartialEq)]
pub struct Coalition {
    pub members: Vec<PseudonymId>,
    pub providers: Vec<ProviderId>,
    pub target: NetworkId,
    pub direction: Direction,
}

impl Coalition {
    pub fn new(
        members: Vec<PseudonymId>,
        providers: Vec<ProviderId>,
        target: NetworkId,
        direction: Direction,
    ) -> Result<Self, AttackError> {
        if members.is_empty() && providers.is_empty() {
            return Err(AttackError::EmptyCoalition);
        }
        Ok(Self {
            members,
            providers,
            target,
            direction,
        })
    }
}

/// Mints `n` attacker-controlled pseudonyms with valid keys. Each one is
/// wired to every honest and support peer.
pub fn spawn_sybils(world: &mut World, n: usize) -> Vec<Pseudonym> {
    let audience: Vec<PseudonymId> = world
        .peers()
        .iter()
        .filter(|p| p.role != Role::Attacker)
        .map(|p| p.id().clone())
        .collect();
    (0..n)
        .map(|_| {
            let pseudonym = world.mint_pseudonym("y");
            let mut peer = PeerState::new(pseudonym.clone(), Role::Attacker, 1);
            peer.neighbors = audience.clone();
            world.insert_peer(peer);
            pseudonym
        })
        .collect()
}

/// One fixed-rating recommendation per sybil per context.
pub fn emit_false_recs(
    sybils: &[Pseudonym],
    target: &NetworkId,
    rating: f64,
    contexts: &[AppContext],
    round: u64,
) -> Vec<Recommendation> {
    sybils
        .iter()
        .flat_map(|s| {
            contexts.iter().map(move |&context| {
                Recommendation::new(
                    QoEObservation {
                        observer: s.id().clone(),
                        network: target.clone(),
                        context,
                        rating,
                        round,
                    },
                    s.key_id().clone(),
                )
            })
        })
        .collect()
}

/// A recommendation claiming to come from `victim`, signed with a key that is
/// not the victim's. Using the victim's real key is `compromise`.
pub fn spoof_as(
    victim: &PseudonymId,
    forged_key: KeyId,
    mut payload: QoEObservation,
    registry: &KeyRegistry,
) -> Result<Recommendation, AttackError> {
    if registry.get(&forged_key).map(|e| &e.owner) == Some(victim) {
        return Err(AttackError::KeyBelongsToVictim {
            key: forged_key,
            victim: victim.clone(),
        });
    }
    payload.observer = victim.clone();
    Ok(Recommendation::new(payload, forged_key))
}

/// Hands the victim's signing key to the attacker. Idempotent.
pub fn compromise(world: &mut World, victim: &PseudonymId) -> Result<(), AttackError> {
    if world.peer(victim).is_none() {
        return Err(AttackError::UnknownPseudonym(victim.clone()));
    }
    world.registry_mut().mark_compromised(victim);
    Ok(())
}

/// Destroys each hosted rec independently with probability `fraction`.
pub fn deny_evidence(support: &mut PeerState, fraction: f64, rng: &mut SimRng) -> usize {
    support
        .store
        .destroy_received(|_| rng.random::<f64>() < fraction)
}

/// Makes `bad` broadcast another network's advertised name.
pub fn ssid_spoof(world: &mut World, bad: &NetworkId, imitated_name: &str) -> Result<(), AttackError> {
    if !world
        .networks()
        .iter()
        .any(|n| n.id() != bad && n.identity.claimed_name == imitated_name)
    {
        return Err(AttackError::NoImitationTarget(imitated_name.to_owned()));
    }
    let net = world
        .network_mut(bad)
        .ok_or_else(|| AttackError::UnknownNetwork(bad.clone()))?;
    net.beacon_name = imitated_name.to_owned();
    Ok(())
}

pub fn whitewash_schedule(spec: &WhitewashNetworkParams, round: u64) -> f64 {
    if round < spec.switch_round {
        spec.q_build
    } else {
        spec.q_betray
    }
}

/// Retires an attacker pseudonym and re-enters under a fresh one with a new
/// key, an empty store and the same neighbors.
pub fn rejoin_fresh(world: &mut World, attacker: &PseudonymId) -> Result<Pseudonym, AttackError> {
    match world.peer(attacker) {
        None => return Err(AttackError::UnknownPseudonym(attacker.clone())),
        Some(p) if p.role != Role::Attacker => {
            return Err(AttackError::NotAttacker(attacker.clone()))
        }
        Some(_) => {}
    }
    let old = world.remove_peer(attacker).expect("checked above");
    let fresh = world.mint_pseudonym("r");
    let mut peer = PeerState::new(fresh.clone(), Role::Attacker, world.settings().capacity);
    peer.neighbors = old.neighbors.clone();
    world.insert_peer(peer);
    for n in &old.neighbors {
        world.connect(fresh.id(), n);
    }
    Ok(fresh)
}

#[derive(Debug, Clone)]
enum Strategy {
    SybilFlood {
        sybils: Vec<Pseudonym>,
        target: NetworkId,
        direction: Direction,
    },
    Collusion(Coalition),
    Spoof {
        victim: PseudonymId,
        per_round: usize,
        target: NetworkId,
        direction: Direction,
        cursor: usize,
    },
    Compromise {
        victim: PseudonymId,
        target: NetworkId,
        direction: Direction,
        from_round: u64,
    },
    Denial {
        fraction: f64,
        targets: Vec<PseudonymId>,
    },
    SsidSpoof {
        network: NetworkId,
    },
    WhitewashNetwork(WhitewashNetworkParams),
    Rejoin {
        current: PseudonymId,
        target: NetworkId,
        direction: Direction,
        betray_round: u64,
        every: u64,
    },
}

/// An installed attack and its per-round counters.
#[derive(Debug, Clone)]
pub struct AttackState {
    kind: &'static str,
    strategy: Strategy,
    counters: BTreeMap<String, u64>,
}

impl AttackState {
    pub fn kind(&self) -> &'static str {
        self.kind
    }

    /// Validates the spec against the world and performs one-off setup.
    pub fn install(world: &mut World, spec: &AttackSpec) -> Result<Self, AttackError> {
        let need_net = |w: &World, id: &NetworkId| {
            w.network(id)
                .map(|_| ())
                .ok_or_else(|| AttackError::UnknownNetwork(id.clone()))
        };
        let need_peer = |w: &World, id: &PseudonymId, role: Option<Role>| match w.peer(id) {
            None => Err(AttackError::UnknownPseudonym(id.clone())),
            Some(p) if role == Some(Role::Attacker) && p.role != Role::Attacker => {
                Err(AttackError::NotAttacker(id.clone()))
            }
            Some(p) if role == Some(Role::Support) && p.role != Role::Support => {
                Err(AttackError::NotSupport(id.clone()))
            }
            Some(_) => Ok(()),
        };
        let (strategy, names): (Strategy, &[&str]) = match spec {
            AttackSpec::SybilFlood(p) => {
                need_net(world, &p.target)?;
                let sybils = spawn_sybils(world, p.count);
                (
                    Strategy::SybilFlood {
                        sybils,
                        target: p.target.clone(),
                        direction: p.direction,
                    },
                    &["emitted", "spawned"],
                )
            }
            AttackSpec::BadmouthCollusion(p) => {
                need_net(world, &p.target)?;
                let members = if p.members.is_empty() {
                    world
                        .peers_with_role(Role::Attacker)
                        .map(|x| x.id().clone())
                        .collect()
                } else {
                    p.members.clone()
                };
                for m in &members {
                    need_peer(world, m, Some(Role::Attacker))?;
                }
                let coalition =
                    Coalition::new(members, p.providers.clone(), p.target.clone(), p.direction)?;
                (Strategy::Collusion(coalition), &["emitted"])
            }
            AttackSpec::Spoof(p) => {
                need_net(world, &p.target)?;
                let victim = match &p.victim {
                    Some(v) => v.clone(),
                    None => world
                        .peers_with_role(Role::Honest)
                        .next()
                        .map(|x| x.id().clone())
                        .ok_or_else(|| AttackError::UnknownPseudonym("<honest>".into()))?,
                };
                need_peer(world, &victim, None)?;
                (
                    Strategy::Spoof {
                        victim,
                        per_round: p.per_round,
                        target: p.target.clone(),
                        direction: p.direction,
                        cursor: 0,
                    },
                    &["forged", "rejected"],
                )
            }
            AttackSpec::Compromise(p) => {
                need_net(world, &p.target)?;
                need_peer(world, &p.victim, None)?;
                (
                    Strategy::Compromise {
                        victim: p.victim.clone(),
                        target: p.target.clone(),
                        direction: p.direction,
                        from_round: p.from_round,
                    },
                    &["compromised", "emitted"],
                )
            }
            AttackSpec::EvidenceDenial(p) => {
                let targets = if p.support_peers.is_empty() {
                    world
                        .peers_with_role(Role::Support)
                        .map(|x| x.id().clone())
                        .collect()
                } else {
                    p.support_peers.clone()
                };
                for t in &targets {
                    need_peer(world, t, Some(Role::Support))?;
                }
                (
                    Strategy::Denial {
                        fraction: p.fraction,
                        targets,
                    },
                    &["destroyed"],
                )
            }
            AttackSpec::SsidSpoof(p) => {
                need_net(world, &p.network)?;
                ssid_spoof(world, &p.network, &p.imitated_name)?;
                (
                    Strategy::SsidSpoof {
                        network: p.network.clone(),
                    },
                    &["misattributed", "sessions"],
                )
            }
            AttackSpec::WhitewashNetwork(p) => {
                need_net(world, &p.network)?;
                (
                    Strategy::WhitewashNetwork(p.clone()),
                    &["betrayal_active", "sessions_after_switch"],
                )
            }
            AttackSpec::WhitewashRejoin(p) => {
                need_net(world, &p.target)?;
                need_peer(world, &p.peer, Some(Role::Attacker))?;
                (
                    Strategy::Rejoin {
                        current: p.peer.clone(),
                        target: p.target.clone(),
                        direction: p.direction,
                        betray_round: p.betray_round,
                        every: p.rejoin_every,
                    },
                    &["emitted", "rejoins"],
                )
            }
        };
        let mut state = Self {
            kind: spec.kind(),
            strategy,
            counters: names.iter().map(|n| ((*n).to_owned(), 0)).collect(),
        };
        if let Strategy::SybilFlood { sybils, .. } = &state.strategy {
            let n = sybils.len() as u64;
            state.bump("spawned", n);
        }
        Ok(state)
    }

    fn bump(&mut self, name: &str, by: u64) {
        *self.counters.entry(name.to_owned()).or_insert(0) += by;
    }

    /// The current pseudonym of a rejoining attacker.
    pub fn current_pseudonym(&self) -> Option<&PseudonymId> {
        match &self.strategy {
            Strategy::Rejoin { current, .. } => Some(current),
            _ => None,
        }
    }

    pub fn sybils(&self) -> &[Pseudonym] {
        match &self.strategy {
            Strategy::SybilFlood { sybils, .. } => sybils,
            _ => &[],
        }
    }

    pub(crate) fn begin_round(&mut self, world: &mut World) {
        let round = world.round();
        match &mut self.strategy {
            Strategy::WhitewashNetwork(p) => {
                let q = whitewash_schedule(p, round);
                if let Some(n) = world.network_mut(&p.network) {
                    n.true_quality = q;
                }
                if round >= p.switch_round {
                    self.bump("betrayal_active", 1);
                }
            }
            Strategy::Compromise {
                victim, from_round, ..
            } if round == *from_round => {
                if compromise(world, victim).is_ok() {
                    self.bump("compromised", 1);
                }
            }
            Strategy::Rejoin {
                current,
                betray_round,
                every,
                ..
            } if *every > 0
                && round > *betray_round
                && (round - *betray_round).is_multiple_of(*every) =>
            {
                if let Ok(fresh) = rejoin_fresh(world, current) {
                    *current = fresh.id().clone();
                    self.bump("rejoins", 1);
                }
            }
            _ => {}
        }
    }

    pub(crate) fn on_session(&mut self, round: u64, used: &NetworkId, attributed: &NetworkId) {
        match &self.strategy {
            Strategy::SsidSpoof { network } if network == used => {
                self.bump("sessions", 1);
                if attributed != used {
                    self.bump("misattributed", 1);
                }
            }
            Strategy::WhitewashNetwork(p) if &p.network == used && round >= p.switch_round => {
                self.bump("sessions_after_switch", 1);
            }
            _ => {}
        }
    }

    pub(crate) fn emit(&mut self, world: &World) -> Vec<Envelope> {
        let round = world.round();
        let contexts = world.settings().contexts.clone();
        let envelope = |to: &PseudonymId, rec: &Recommendation| Envelope {
            to: to.clone(),
            rec: rec.clone(),
            origin: Origin::Gossip,
        };
        let to_neighbors = |recs: Vec<Recommendation>| -> Vec<Envelope> {
            let mut out = Vec::new();
            for rec in &recs {
                if let Some(p) = world.peer(rec.recommender()) {
                    out.extend(p.neighbors.iter().map(|n| envelope(n, rec)));
                }
            }
            out
        };
        let (out, emitted) = match &mut self.strategy {
            Strategy::SybilFlood {
                sybils,
                target,
                direction,
            } => {
                let recs = emit_false_recs(sybils, target, direction.rating(), &contexts, round);
                let n = recs.len() as u64;
                (to_neighbors(recs), n)
            }
            Strategy::Collusion(c) => {
                let members: Vec<Pseudonym> = c
                    .members
                    .iter()
                    .filter_map(|m| world.peer(m).map(|p| p.pseudonym.clone()))
                    .collect();
                let recs =
                    emit_false_recs(&members, &c.target, c.direction.rating(), &contexts, round);
                let n = recs.len() as u64;
                (to_neighbors(recs), n)
            }
            Strategy::Spoof {
                victim,
                per_round,
                target,
                direction,
                cursor,
            } => {
                let honest: Vec<&PseudonymId> = world
                    .peers_with_role(Role::Honest)
                    .map(|p| p.id())
                    .filter(|id| *id != victim)
                    .collect();
                let mut out = Vec::with_capacity(*per_round);
                if !honest.is_empty() {
                    for i in 0..*per_round {
                        let payload = QoEObservation {
                            observer: victim.clone(),
                            network: target.clone(),
                            context: contexts[i % contexts.len()],
                            rating: direction.rating(),
                            round,
                        };
                        let key = KeyId(format!("forged-{round}-{i}"));
                        if let Ok(rec) = spoof_as(victim, key, payload, world.registry()) {
                            out.push(envelope(honest[*cursor % honest.len()], &rec));
                            *cursor += 1;
                        }
                    }
                }
                let n = out.len() as u64;
                self.bump("forged", n);
                (out, 0)
            }
            Strategy::Compromise {
                victim,
                target,
                direction,
                from_round,
            } => {
                let key = world
                    .registry()
                    .is_compromised(victim)
                    .then(|| world.registry().key_of(victim))
                    .flatten();
                match key {
                    Some(key) if round >= *from_round => {
                        let pseudo = Pseudonym::new(victim.clone(), key.clone());
                        let recs = emit_false_recs(
                            &[pseudo],
                            target,
                            direction.rating(),
                            &contexts,
                            round,
                        );
                        let audience: Vec<&PseudonymId> = world
                            .peers()
                            .iter()
                            .filter(|p| p.role != Role::Attacker && p.id() != victim)
                            .map(|p| p.id())
                            .collect();
                        let n = recs.len() as u64;
                        let out = recs
                            .iter()
                            .flat_map(|r| audience.iter().map(move |to| envelope(to, r)))
                            .collect();
                        (out, n)
                    }
                    _ => (Vec::new(), 0),
                }
            }
            Strategy::Rejoin {
                current,
                target,
                direction,
                betray_round,
                ..
            } => {
                let Some(peer) = world.peer(current) else {
                    return Vec::new();
                };
                let rating = if round < *betray_round {
                    world.network(target).map_or(0.5, |n| n.true_quality)
                } else {
                    direction.rating()
                };
                let recs = emit_false_recs(
                    std::slice::from_ref(&peer.pseudonym),
                    target,
                    rating,
                    &contexts,
                    round,
                );
                let n = recs.len() as u64;
                (to_neighbors(recs), n)
            }
            Strategy::Denial { .. } | Strategy::SsidSpoof { .. } | Strategy::WhitewashNetwork(_) => {
                (Vec::new(), 0)
            }
        };
        if emitted > 0 {
            self.bump("emitted", emitted);
        }
        out
    }

    pub(crate) fn on_rejected(&mut self) {
        if matches!(self.strategy, Strategy::Spoof { .. }) {
            self.bump("rejected", 1);
        }
    }

    /// Runs post-gossip effects. Returns the number of hosted recs destroyed.
    pub(crate) fn after_gossip(&mut self, world: &mut World) -> u64 {
        let Strategy::Denial { fraction, targets } = &self.strategy else {
            return 0;
        };
        let fraction = *fraction;
        let destroyed: u64 = targets
            .clone()
            .iter()
            .map(|t| world.deny_on(t, fraction) as u64)
            .sum();
        self.bump("destroyed", destroyed);
        destroyed
    }

    /// Reports and resets this round's counters.
    pub(crate) fn take_report(&mut self) -> AttackReport {
        let counters = self.counters.clone();
        for v in self.counters.values_mut() {
            *v = 0;
        }
        AttackReport {
            kind: self.kind.to_owned(),
            counters,
        }
    }
}
