//! Fixtures shared by the integration suites.
#![allow(dead_code)]

use patrol_core::env::OBS_DIM;
use patrol_core::marl::{rollout, LatentChoice};
use patrol_core::{EnvConfig, Episode, MlpDims, MlpParams, Observation, PolicyArch, PolicySet};
use rand::Rng;

/// The 15 x 15, four-agent, two-mode setting used by the end-to-end checks.
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

/// Per-agent policies over `obs_dim`-long observations with non-zero
/// hidden biases, so ReLU units are not all in one regime.
pub fn random_policies<R: Rng>(rng: &mut R, n_agents: usize, k: usize, obs_dim: usize, hidden: usize) -> PolicySet {
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

/// Synthetic episode with uniform random observations, actions and rewards.
pub fn random_episode<R: Rng>(rng: &mut R, n_agents: usize, len: usize, obs_dim: usize) -> Episode {
    Episode {
        observations: (0..n_agents)
            .map(|_| (0..len).map(|_| Observation((0..obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect())
            .collect(),
        actions: (0..n_agents).map(|_| (0..len).map(|_| rng.gen_range(0..6)).collect()).collect(),
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

/// Episodes from the real environment, conditioned on the true mode.
pub fn env_buffer<R: Rng>(rng: &mut R, env: &EnvConfig, policies: &PolicySet, n: usize) -> Vec<Episode> {
    (0..n)
        .map(|_| {
            let mode = rng.gen_range(0..env.n_modes);
            rollout(env, policies, LatentChoice::Fixed(mode), mode, false, rng).unwrap()
        })
        .collect()
}

pub fn default_obs_dim() -> usize {
    OBS_DIM
}

/// Plays `steps` uniformly random joint actions, resetting whenever an
/// episode ends, and returns a description of every invariant violation.
pub fn audit_random_steps<R: Rng>(env: &EnvConfig, steps: usize, rng: &mut R) -> Vec<String> {
    use patrol_core::env::{reset, Action};
    let mut bad = Vec::new();
    let mut state = reset(env, None, rng).unwrap();
    let mut spawned = state.poachers.len();
    let mut detected = 0;
    for step in 0..steps {
        if state.is_done() {
            state = reset(env, None, rng).unwrap();
            spawned = state.poachers.len();
            detected = 0;
        }
        let actions: Vec<Action> = (0..env.n_agents).map(|_| Action::ALL[rng.gen_range(0..6)]).collect();
        let before_visited = state.visited_highrisk_count();
        let before_alive: Vec<bool> = state.poachers.iter().map(|p| p.alive).collect();
        let t = state.t;
        let out = state.step(&actions, rng);
        let mut fail = |what: String| bad.push(format!("step {step}: {what}"));

        for (i, u) in state.uavs.iter().enumerate() {
            if !state.is_free(u.pos) {
                fail(format!("uav {i} on blocked cell {:?}", u.pos));
            }
            if state.uavs[..i].iter().any(|o| o.pos == u.pos) {
                fail(format!("uav {i} shares a cell"));
            }
        }
        for (p, q) in state.poachers.iter().enumerate() {
            if !state.is_free(q.pos) {
                fail(format!("poacher {p} on blocked cell {:?}", q.pos));
            }
        }
        let visited = state.visited_highrisk_count();
        if visited < before_visited || visited - before_visited != out.new_highrisk_cells {
            fail(format!("coverage {before_visited} -> {visited} with {} new", out.new_highrisk_cells));
        }
        if !state.visited_highrisk().is_subset(&state.highrisk_cells()) {
            fail("visited cell outside the high-risk set".into());
        }
        for &(_, p) in &out.detections {
            if !before_alive[p] || state.poachers[p].alive {
                fail(format!("detection of poacher {p} not a live-to-dead transition"));
            }
        }
        detected += out.detections.len();
        if detected + state.alive_poachers() != spawned {
            fail(format!("{detected} detected + {} alive != {spawned} spawned", state.alive_poachers()));
        }
        let expected = 10.0 * out.detections.len() as f64 + 0.1 * out.new_highrisk_cells as f64
            - 0.01 * env.n_agents as f64
            - out.collisions.len() as f64;
        if (out.team_reward - expected).abs() > 1e-12 {
            fail(format!("reward {} != {expected}", out.team_reward));
        }
        if state.t != t + 1 || out.done != state.is_done() {
            fail("clock or done flag inconsistent".into());
        }
        for i in 0..env.n_agents {
            let o = state.observe(i);
            if o.len() != OBS_DIM || o.iter().any(|x| !x.is_finite() || x.abs() > 1.0) {
                fail(format!("observation of agent {i} out of range"));
            }
        }
    }
    bad
}

/// Logits of `W2 relu(W1 x + b1) + b2` evaluated straight from the
/// parameter slices, with no shared code path.
pub fn naive_logits(net: &MlpParams, x: &[f64]) -> Vec<f64> {
    let d = net.dims();
    let (w1, b1, w2, b2) = (net.w1(), net.b1(), net.w2(), net.b2());
    let hidden: Vec<f64> = (0..d.n_hidden)
        .map(|h| {
            let mut s = b1[h];
            for j in 0..d.n_in {
                s += w1[h * d.n_in + j] * x[j];
            }
            if s > 0.0 { s } else { 0.0 }
        })
        .collect();
    (0..d.n_out)
        .map(|o| b2[o] + (0..d.n_hidden).map(|h| w2[o * d.n_hidden + h] * hidden[h]).sum::<f64>())
        .collect()
}

/// `log(exp(l_a / tau) / sum_j exp(l_j / tau))` without max-shifting.
pub fn naive_log_prob(logits: &[f64], action: usize, tau: f64) -> f64 {
    let den: f64 = logits.iter().map(|l| (l / tau).exp()).sum();
    ((logits[action] / tau).exp() / den).ln()
}
