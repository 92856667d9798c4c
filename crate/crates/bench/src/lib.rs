//! Shared fixtures for the benchmarks.

use patrol_core::marl::{rollout, LatentChoice};
use patrol_core::{EnvConfig, Episode, PolicyArch, PolicySet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The desk-scale environment used throughout the benches.
pub fn desk_env() -> EnvConfig {
    EnvConfig {
        grid_w: 15,
        grid_h: 15,
        n_agents: 4,
        n_poachers: 2,
        n_modes: 2,
        horizon: 100,
        ..Default::default()
    }
}

pub fn desk_policies(env: &EnvConfig) -> PolicySet {
    PolicySet::with_default_width(PolicyArch::PerAgent, env.n_agents, env.n_modes, &mut ChaCha8Rng::seed_from_u64(0))
}

pub fn desk_episode(env: &EnvConfig, policies: &PolicySet, seed: u64) -> Episode {
    rollout(env, policies, LatentChoice::Fixed(0), 0, false, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}
