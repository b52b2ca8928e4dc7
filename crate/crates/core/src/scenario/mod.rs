//! Scenario configs, seeded runs, sweeps and metrics output.
//!
//! The seed in the config is used unless a seed override is given; the
//! override wins.

mod config;
mod metrics;

pub use config::{
    load_config, ConfigError, GossipSpec, NetworkSpec, PeerSpec, ScenarioConfig, Topology,
};
pub use metrics::{
    best_networks, best_share, emit_metrics, render_metrics, selection_share, write_metrics,
    Format, MetricsSeries, Summary, CONVERGED_SHARE,
};

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::evidence::{NetworkId, NetworkIdentity, PseudonymId};
use crate::simnet::{GroundTruthNetwork, Role, RoundReport, SimSettings, World};

pub fn settings(cfg: &ScenarioConfig) -> SimSettings {
    SimSettings {
        params: cfg.metric_params.clone(),
        risk: cfg.risk_table.clone(),
        lambda: cfg.lambda,
        p_mislead: cfg.p_mislead,
        noise_sigma: cfg.noise_sigma,
        contexts: cfg.contexts.clone(),
        fanout_budget: cfg.gossip.fanout_budget,
        relay_budget: cfg.gossip.relay_budget,
        max_hops: cfg.gossip.max_hops,
        neighbor_sample: cfg.gossip.neighbor_sample,
        explore_epsilon: cfg.explore_epsilon,
        prune_min_weight: cfg.prune_min_weight,
        misprediction_window: cfg.misprediction_window,
        capacity: cfg.peers.capacity,
    }
}

/// Builds the initial world for a validated config.
///
/// Peers are minted as `a0000..` (attackers), `h0000..` (honest) and
/// `s0000..` (support). Honest taste offsets are drawn first from the world
/// stream, in id order, before any round runs.
pub fn build_world(cfg: &ScenarioConfig, seed: u64) -> Result<World, ConfigError> {
    let networks = cfg
        .networks
        .iter()
        .map(|n| {
            GroundTruthNetwork::new(
                NetworkIdentity {
                    authentic_id: n.id.clone(),
                    claimed_name: n.claimed_name.clone().unwrap_or_else(|| n.id.to_string()),
                    provider_id: n.provider.clone().unwrap_or_else(|| n.id.as_str().into()),
                    cost: n.cost,
                },
                n.true_quality,
            )
        })
        .collect();
    let mut world = World::new(settings(cfg), networks, seed).map_err(|e| ConfigError::Range {
        path: "metric_params.half_life".into(),
        msg: e.to_string(),
    })?;

    let p = &cfg.peers;
    let honest: Vec<PseudonymId> = (0..p.honest).map(|_| world.add_peer("h", Role::Honest)).collect();
    for _ in 0..p.attackers {
        world.add_peer("a", Role::Attacker);
    }
    for _ in 0..p.support {
        world.add_peer("s", Role::Support);
    }

    if p.taste_sigma > 0.0 {
        for id in &honest {
            let z: f64 = world.rng_mut().sample(StandardNormal);
            let offset = (p.taste_sigma * z).clamp(-0.2, 0.2);
            world.peer_mut(id).expect("just added").taste_offset = offset;
        }
    }
    for (i, id) in honest.iter().enumerate() {
        for k in 1..=p.friends_per_peer {
            let friend = honest[(i + k) % honest.len()].clone();
            world.peer_mut(id).expect("just added").friends.insert(friend, p.friend_weight);
        }
    }

    let ids: Vec<PseudonymId> = world.peers().iter().map(|x| x.id().clone()).collect();
    match cfg.topology.as_ref().unwrap_or(&Topology::Complete) {
        Topology::Complete => {
            for (i, a) in ids.iter().enumerate() {
                let mut neighbors: Vec<PseudonymId> = ids.clone();
                neighbors.remove(i);
                world.peer_mut(a).expect("exists").neighbors = neighbors;
            }
        }
        Topology::Ring => {
            if ids.len() > 1 {
                for i in 0..ids.len() {
                    world.connect(&ids[i], &ids[(i + 1) % ids.len()]);
                }
            }
        }
        Topology::Edges { edges } => {
            for (a, b) in edges {
                world.connect(a, b);
            }
        }
    }

    if cfg.attacks_enabled {
        for (i, spec) in cfg.attacks.iter().enumerate() {
            world.install_attack(spec).map_err(|e| ConfigError::Invalid {
                path: format!("attacks[{i}]"),
                msg: e.to_string(),
            })?;
        }
    }
    Ok(world)
}

/// Networks favored by the enabled attacks.
pub fn attacker_networks(cfg: &ScenarioConfig, world: &World) -> BTreeSet<NetworkId> {
    if !cfg.attacks_enabled {
        return BTreeSet::new();
    }
    cfg.attacks
        .iter()
        .flat_map(|a| a.beneficiaries(world.networks()))
        .collect()
}

/// Runs the scenario, calling `observe` after each round with the world and
/// that round's report.
pub fn run_observed(
    cfg: &ScenarioConfig,
    seed_override: Option<u64>,
    mut observe: impl FnMut(&World, &RoundReport),
) -> Result<MetricsSeries, ConfigError> {
    let seed = seed_override.unwrap_or(cfg.seed);
    let mut world = build_world(cfg, seed)?;
    let attackers = attacker_networks(cfg, &world);
    let mut rounds = Vec::with_capacity(cfg.rounds as usize);
    for _ in 0..cfg.rounds {
        let report = world.step_round();
        observe(&world, &report);
        rounds.push(report);
    }
    let summary = Summary::compute(seed, &rounds, &attackers);
    Ok(MetricsSeries { rounds, summary })
}

pub fn run(cfg: &ScenarioConfig, seed_override: Option<u64>) -> Result<MetricsSeries, ConfigError> {
    run_observed(cfg, seed_override, |_, _| {})
}

/// Runs seeds `cfg.seed .. cfg.seed + n` in parallel. Results are in seed
/// order.
pub fn sweep(cfg: &ScenarioConfig, n: u64) -> Result<Vec<MetricsSeries>, ConfigError> {
    (0..n)
        .into_par_iter()
        .map(|i| run(cfg, Some(cfg.seed.wrapping_add(i))))
        .collect()
}

/// File name a sweep uses for one seed.
pub fn sweep_file(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed-{seed}.jsonl"))
}
