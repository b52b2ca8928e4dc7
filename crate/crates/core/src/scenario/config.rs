use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::AttackSpec;
use crate::evidence::{AppContext, NetworkId, ProviderId, PseudonymId};
use crate::risk::RiskTable;
use crate::trust::MetricParams;

/// What went wrong while loading a config. Every variant names the offending
/// path (`attacks[0].params.target`, `peers.taste_sigma`, ...).
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON at line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("missing required field `{field}` at `{path}`")]
    MissingField { path: String, field: String },
    #[error("unknown key `{key}` at `{path}`")]
    UnknownKey { path: String, key: String },
    #[error("invalid value at `{path}`: {msg}")]
    Invalid { path: String, msg: String },
    #[error("out of range at `{path}`: {msg}")]
    Range { path: String, msg: String },
    #[error("dangling reference at `{path}`: no {what} `{id}`")]
    DanglingReference {
        path: String,
        what: &'static str,
        id: String,
    },
}

impl ConfigError {
    /// The JSON path the diagnostic refers to, if any.
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Io { .. } | ConfigError::Syntax { .. } => None,
            ConfigError::MissingField { path, .. }
            | ConfigError::UnknownKey { path, .. }
            | ConfigError::Invalid { path, .. }
            | ConfigError::Range { path, .. }
            | ConfigError::DanglingReference { path, .. } => Some(path),
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, ConfigError::Io { .. })
    }
}

fn default_taste_sigma() -> f64 {
    0.05
}
fn default_friend_weight() -> f64 {
    1.0
}
fn default_capacity() -> usize {
    5000
}
fn default_noise_sigma() -> f64 {
    0.05
}
fn default_contexts() -> Vec<AppContext> {
    vec![AppContext::Browsing]
}
fn default_prune() -> f64 {
    0.01
}
fn default_window() -> usize {
    10
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeerSpec {
    pub honest: usize,
    #[serde(default)]
    pub attackers: usize,
    #[serde(default)]
    pub support: usize,
    /// Std of the per-user taste offset, clamped to [-0.2, 0.2].
    #[serde(default = "default_taste_sigma")]
    pub taste_sigma: f64,
    /// Each honest peer befriends this many honest peers following it in id
    /// order (wrapping).
    #[serde(default)]
    pub friends_per_peer: usize,
    #[serde(default = "default_friend_weight")]
    pub friend_weight: f64,
    /// Evidence store capacity per peer.
    #[serde(default = "default_capacity")]
    pub capacity: usize,
}

impl PeerSpec {
    pub fn total(&self) -> usize {
        self.honest + self.attackers + self.support
    }

    /// Pseudonym ids the world will mint for configured peers, in id order.
    pub fn ids(&self) -> Vec<PseudonymId> {
        let mut ids: Vec<PseudonymId> = [("a", self.attackers), ("h", self.honest), ("s", self.support)]
            .iter()
            .flat_map(|&(p, n)| (0..n).map(move |i| PseudonymId(format!("{p}{i:04}"))))
            .collect();
        ids.sort();
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub id: NetworkId,
    /// Advertised name. Defaults to the id.
    #[serde(default)]
    pub claimed_name: Option<String>,
    /// Operating provider. Defaults to the id.
    #[serde(default)]
    pub provider: Option<ProviderId>,
    pub true_quality: f64,
    #[serde(default)]
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    Complete,
    /// Peers in id order, each linked to its successor, wrapping.
    Ring,
    Edges { edges: Vec<(PseudonymId, PseudonymId)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GossipSpec {
    #[serde(default = "GossipSpec::default_fanout")]
    pub fanout_budget: usize,
    #[serde(default = "GossipSpec::default_relay")]
    pub relay_budget: usize,
    #[serde(default = "GossipSpec::default_hops")]
    pub max_hops: u32,
    #[serde(default)]
    pub neighbor_sample: Option<usize>,
}

impl GossipSpec {
    fn default_fanout() -> usize {
        1
    }
    fn default_relay() -> usize {
        2
    }
    fn default_hops() -> u32 {
        2
    }
}

impl Default for GossipSpec {
    fn default() -> Self {
        Self {
            fanout_budget: Self::default_fanout(),
            relay_budget: Self::default_relay(),
            max_hops: Self::default_hops(),
            neighbor_sample: None,
        }
    }
}

/// A complete scenario. After [`load_config`] every optional field is
/// filled in, so serializing the result gives a self-contained config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub rounds: u64,
    pub peers: PeerSpec,
    pub networks: Vec<NetworkSpec>,
    /// Defaults to complete for up to 50 configured peers, ring otherwise.
    #[serde(default)]
    pub topology: Option<Topology>,
    #[serde(default)]
    pub metric_params: MetricParams,
    /// Missing contexts take their default thresholds.
    #[serde(default)]
    pub risk_table: RiskTable,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub p_mislead: f64,
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    /// Each session draws its context uniformly from this list.
    #[serde(default = "default_contexts")]
    pub contexts: Vec<AppContext>,
    #[serde(default)]
    pub gossip: GossipSpec,
    #[serde(default)]
    pub explore_epsilon: f64,
    #[serde(default = "default_prune")]
    pub prune_min_weight: f64,
    #[serde(default = "default_window")]
    pub misprediction_window: usize,
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
    /// `false` validates the attack list but installs nothing.
    #[serde(default = "default_true")]
    pub attacks_enabled: bool,
}

impl ScenarioConfig {
    /// A config with the given population and networks and every other field
    /// at its default.
    pub fn new(rounds: u64, peers: PeerSpec, networks: Vec<NetworkSpec>) -> Self {
        let mut cfg = Self {
            seed: 0,
            rounds,
            peers,
            networks,
            topology: None,
            metric_params: MetricParams::default(),
            risk_table: RiskTable::default(),
            lambda: 0.0,
            p_mislead: 0.0,
            noise_sigma: default_noise_sigma(),
            contexts: default_contexts(),
            gossip: GossipSpec::default(),
            explore_epsilon: 0.0,
            prune_min_weight: default_prune(),
            misprediction_window: default_window(),
            attacks: Vec::new(),
            attacks_enabled: true,
        };
        cfg.materialize();
        cfg
    }

    /// Fills defaults that depend on other fields.
    pub fn materialize(&mut self) {
        for n in &mut self.networks {
            n.claimed_name.get_or_insert_with(|| n.id.as_str().to_owned());
            n.provider.get_or_insert_with(|| n.id.as_str().into());
        }
        if self.topology.is_none() {
            self.topology = Some(if self.peers.total() <= 50 {
                Topology::Complete
            } else {
                Topology::Ring
            });
        }
        let defaults = RiskTable::default();
        for c in AppContext::ALL {
            self.risk_table.0.entry(c).or_insert(defaults.0[&c]);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        Validator { cfg: self }.run()
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut cfg: ScenarioConfig =
            serde_path_to_error::deserialize(de).map_err(classify)?;
        cfg.materialize();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads, parses, validates and materializes a scenario config.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ScenarioConfig::from_json(&text)
}

fn classify(err: serde_path_to_error::Error<serde_json::Error>) -> ConfigError {
    let path = err.path().to_string();
    let inner = err.into_inner();
    let full = inner.to_string();
    // Strip serde_json's " at line X column Y" suffix.
    let msg = match full.rfind(" at line ") {
        Some(i) => full[..i].to_owned(),
        None => full.clone(),
    };
    use serde_json::error::Category;
    match inner.classify() {
        Category::Io => ConfigError::Io {
            path: "<input>".into(),
            source: std::io::Error::other(msg),
        },
        Category::Syntax | Category::Eof => ConfigError::Syntax {
            line: inner.line(),
            column: inner.column(),
            msg,
        },
        Category::Data => {
            if let Some(field) = backticked(&msg, "missing field `") {
                ConfigError::MissingField { path, field }
            } else if let Some(key) = backticked(&msg, "unknown field `")
                .or_else(|| backticked(&msg, "unknown variant `"))
            {
                ConfigError::UnknownKey { path, key }
            } else {
                ConfigError::Invalid { path, msg }
            }
        }
    }
}

fn backticked(msg: &str, prefix: &str) -> Option<String> {
    let rest = msg.strip_prefix(prefix)?;
    rest.find('`').map(|end| rest[..end].to_owned())
}

struct Validator<'a> {
    cfg: &'a ScenarioConfig,
}

struct At<'a>(&'a str, Option<usize>, &'a str);

impl fmt::Display for At<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.1 {
            Some(i) => write!(f, "{}[{}].{}", self.0, i, self.2),
            None => write!(f, "{}.{}", self.0, self.2),
        }
    }
}

fn range(path: impl ToString, msg: impl Into<String>) -> ConfigError {
    ConfigError::Range {
        path: path.to_string(),
        msg: msg.into(),
    }
}

fn check_unit(path: impl ToString, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(range(path, format!("{v} is not in [0, 1]")))
    }
}

fn check_nonneg(path: impl ToString, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(range(path, format!("{v} must be finite and >= 0")))
    }
}

impl Validator<'_> {
    fn run(&self) -> Result<(), ConfigError> {
        self.scalars()?;
        self.networks()?;
        let ids: BTreeSet<PseudonymId> = self.cfg.peers.ids().into_iter().collect();
        self.topology(&ids)?;
        for (i, a) in self.cfg.attacks.iter().enumerate() {
            self.attack(i, a, &ids)?;
        }
        Ok(())
    }

    fn scalars(&self) -> Result<(), ConfigError> {
        let c = self.cfg;
        let p = &c.peers;
        check_nonneg("peers.taste_sigma", p.taste_sigma)?;
        check_unit("peers.friend_weight", p.friend_weight)?;
        if p.capacity == 0 {
            return Err(range("peers.capacity", "must be at least 1"));
        }
        if p.friends_per_peer > 0 && p.friends_per_peer >= p.honest {
            return Err(range(
                "peers.friends_per_peer",
                format!("{} friends need more than {} honest peers", p.friends_per_peer, p.honest),
            ));
        }
        let m = &c.metric_params;
        if m.half_life == 0 {
            return Err(range("metric_params.half_life", "must be at least 1"));
        }
        check_nonneg("metric_params.rec_prior_pos", m.rec_prior_pos)?;
        check_nonneg("metric_params.rec_prior_neg", m.rec_prior_neg)?;
        if m.rec_prior_pos + m.rec_prior_neg <= 0.0 {
            return Err(range(
                "metric_params.rec_prior_neg",
                "rec_prior_pos + rec_prior_neg must be > 0",
            ));
        }
        if let Some(cap) = m.sybil_cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(range("metric_params.sybil_cap", format!("{cap} must be > 0")));
            }
        }
        check_unit("metric_params.confidence_floor", m.confidence_floor)?;
        for (ctx, v) in &c.risk_table.0 {
            check_unit(format!("risk_table.{}", ctx.as_str()), *v)?;
        }
        check_nonneg("lambda", c.lambda)?;
        check_unit("p_mislead", c.p_mislead)?;
        check_nonneg("noise_sigma", c.noise_sigma)?;
        if c.contexts.is_empty() {
            return Err(range("contexts", "needs at least one context"));
        }
        let mut seen = BTreeSet::new();
        for (i, ctx) in c.contexts.iter().enumerate() {
            if !seen.insert(ctx) {
                return Err(range(format!("contexts[{i}]"), format!("duplicate `{}`", ctx.as_str())));
            }
        }
        if c.gossip.neighbor_sample == Some(0) {
            return Err(range("gossip.neighbor_sample", "must be at least 1"));
        }
        check_unit("explore_epsilon", c.explore_epsilon)?;
        if !(0.0..1.0).contains(&c.prune_min_weight) {
            return Err(range("prune_min_weight", "must be in [0, 1)"));
        }
        if c.misprediction_window == 0 {
            return Err(range("misprediction_window", "must be at least 1"));
        }
        Ok(())
    }

    fn networks(&self) -> Result<(), ConfigError> {
        if self.cfg.networks.is_empty() {
            return Err(range("networks", "needs at least one network"));
        }
        let mut seen = BTreeSet::new();
        for (i, n) in self.cfg.networks.iter().enumerate() {
            if !seen.insert(&n.id) {
                return Err(range(At("networks", Some(i), "id"), format!("duplicate id `{}`", n.id)));
            }
            check_unit(At("networks", Some(i), "true_quality"), n.true_quality)?;
            check_nonneg(At("networks", Some(i), "cost"), n.cost)?;
        }
        Ok(())
    }

    fn topology(&self, ids: &BTreeSet<PseudonymId>) -> Result<(), ConfigError> {
        if let Some(Topology::Edges { edges }) = &self.cfg.topology {
            for (i, (a, b)) in edges.iter().enumerate() {
                for (j, end) in [a, b].into_iter().enumerate() {
                    if !ids.contains(end) {
                        return Err(ConfigError::DanglingReference {
                            path: format!("topology.edges[{i}][{j}]"),
                            what: "peer",
                            id: end.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn network(&self, path: At<'_>, id: &NetworkId) -> Result<(), ConfigError> {
        if self.cfg.networks.iter().any(|n| &n.id == id) {
            Ok(())
        } else {
            Err(ConfigError::DanglingReference {
                path: path.to_string(),
                what: "network",
                id: id.to_string(),
            })
        }
    }

    fn provider(&self, path: String, id: &ProviderId) -> Result<(), ConfigError> {
        if self
            .cfg
            .networks
            .iter()
            .any(|n| n.provider.as_ref().unwrap_or(&ProviderId::from(n.id.as_str())) == id)
        {
            Ok(())
        } else {
            Err(ConfigError::DanglingReference {
                path,
                what: "provider",
                id: id.to_string(),
            })
        }
    }

    fn peer(
        &self,
        path: String,
        id: &PseudonymId,
        ids: &BTreeSet<PseudonymId>,
        prefix: Option<(&str, &'static str)>,
    ) -> Result<(), ConfigError> {
        if !ids.contains(id) {
            return Err(ConfigError::DanglingReference {
                path,
                what: "peer",
                id: id.to_string(),
            });
        }
        match prefix {
            Some((p, role)) if !id.as_str().starts_with(p) => {
                Err(range(path, format!("`{id}` is not a {role} peer")))
            }
            _ => Ok(()),
        }
    }

    fn attack(&self, i: usize, a: &AttackSpec, ids: &BTreeSet<PseudonymId>) -> Result<(), ConfigError> {
        let at = |field: &'static str| At("attacks", Some(i), field);
        let p = |field: &str| format!("attacks[{i}].params.{field}");
        match a {
            AttackSpec::SybilFlood(s) => {
                self.network(at("params.target"), &s.target)?;
                self.provider(p("controller"), &s.controller)?;
            }
            AttackSpec::BadmouthCollusion(s) => {
                self.network(at("params.target"), &s.target)?;
                for (j, m) in s.members.iter().enumerate() {
                    self.peer(p(&format!("members[{j}]")), m, ids, Some(("a", "attacker")))?;
                }
                for (j, pr) in s.providers.iter().enumerate() {
                    self.provider(p(&format!("providers[{j}]")), pr)?;
                }
                if s.members.is_empty() && s.providers.is_empty() && self.cfg.peers.attackers == 0 {
                    return Err(range(p("members"), "coalition has no members"));
                }
            }
            AttackSpec::Spoof(s) => {
                self.network(at("params.target"), &s.target)?;
                match &s.victim {
                    Some(v) => self.peer(p("victim"), v, ids, None)?,
                    None if self.cfg.peers.honest == 0 => {
                        return Err(range(p("victim"), "no honest peer to impersonate"))
                    }
                    None => {}
                }
            }
            AttackSpec::Compromise(s) => {
                self.network(at("params.target"), &s.target)?;
                self.peer(p("victim"), &s.victim, ids, None)?;
            }
            AttackSpec::EvidenceDenial(s) => {
                check_unit(p("fraction"), s.fraction)?;
                for (j, sp) in s.support_peers.iter().enumerate() {
                    self.peer(p(&format!("support_peers[{j}]")), sp, ids, Some(("s", "support")))?;
                }
            }
            AttackSpec::SsidSpoof(s) => {
                self.network(at("params.network"), &s.network)?;
                let imitated = self.cfg.networks.iter().any(|n| {
                    n.id != s.network
                        && n.claimed_name.as_deref().unwrap_or(n.id.as_str()) == s.imitated_name
                });
                if !imitated {
                    return Err(ConfigError::DanglingReference {
                        path: p("imitated_name"),
                        what: "network advertising",
                        id: s.imitated_name.clone(),
                    });
                }
            }
            AttackSpec::WhitewashNetwork(s) => {
                self.network(at("params.network"), &s.network)?;
                check_unit(p("q_build"), s.q_build)?;
                check_unit(p("q_betray"), s.q_betray)?;
            }
            AttackSpec::WhitewashRejoin(s) => {
                self.network(at("params.target"), &s.target)?;
                self.peer(p("peer"), &s.peer, ids, Some(("a", "attacker")))?;
            }
        }
        Ok(())
    }
}
