//! Fixtures shared by unit tests.

use rand::Rng;

use crate::env::Observation;
use crate::marl::Episode;
use crate::nn::{MlpDims, MlpParams};
use crate::policy::{PolicyArch, PolicySet};

/// Random per-agent policies over `obs_dim`-long observations.
pub fn tiny_policies<R: Rng>(rng: &mut R, n_agents: usize, k: usize, obs_dim: usize, hidden: usize) -> PolicySet {
    let dims = MlpDims::new(obs_dim + k, hidden, 6);
    let nets = (0..n_agents)
        .map(|_| {
            let mut p = MlpParams::init(dims, rng);
            for b in p.b1_mut() {
                *b = rng.gen_range(-0.5..0.5);
            }
            p
        })
        .collect();
    PolicySet::from_nets(PolicyArch::PerAgent, n_agents, k, obs_dim, nets).unwrap()
}

/// Random episode with `len` steps; observation entries in `[-1, 1]`.
pub fn tiny_episode<R: Rng>(rng: &mut R, n_agents: usize, len: usize, obs_dim: usize) -> Episode {
    let observations = (0..n_agents)
        .map(|_| {
            (0..len)
                .map(|_| Observation((0..obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))
                .collect()
        })
        .collect();
    let actions = (0..n_agents)
        .map(|_| (0..len).map(|_| rng.gen_range(0..6)).collect())
        .collect();
    Episode {
        observations,
        actions,
        rewards: (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        z: 0,
        true_mode: 0,
        horizon: len,
        detections: 0,
        collisions: 0,
        spawned_poachers: 1,
        coverage: 0.0,
        mean_entropy: 0.0,
    }
}
