use rand::Rng;

use super::Episode;
use crate::env::{reset, Action, EnvConfig, Observation};
use crate::error::{Error, Result};
use crate::latent::{encoder_features, Encoder};
use crate::metrics::{detection_rate, kl_ground_truth};
use crate::nn::entropy;
use crate::policy::PolicySet;

/// How the latent fed to the policies is chosen during an episode.
#[derive(Debug, Clone, Copy)]
pub enum LatentChoice<'a> {
    /// Held fixed for the whole episode.
    Fixed(usize),
    /// Starts at `initial`; after `commit_step` steps the encoder's most
    /// probable latent given the trajectory so far is used to the end.
    Inferred {
        encoder: &'a Encoder,
        initial: usize,
        commit_step: usize,
    },
}

/// Draws an action index by inverse CDF from log-probabilities.
pub fn sample_action<R: Rng + ?Sized>(log_probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (a, lp) in log_probs.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return a;
        }
    }
    log_probs.len() - 1
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}

/// Plays one episode with the environment reset to scenario `mode`.
///
/// Actions are sampled from the policies at temperature 1, or taken
/// greedily when `greedy` is set.
pub fn rollout<R: Rng + ?Sized>(
    env: &EnvConfig,
    policies: &PolicySet,
    latent: LatentChoice<'_>,
    mode: usize,
    greedy: bool,
    rng: &mut R,
) -> Result<Episode> {
    let mut state = reset(env, Some(mode), rng)?;
    let n = env.n_agents;
    let mut z = match latent {
        LatentChoice::Fixed(z) | LatentChoice::Inferred { initial: z, .. } => z,
    };
    if z >= policies.n_latent() {
        return Err(Error::InvalidConfig(format!(
            "latent {z} out of range for {} components",
            policies.n_latent()
        )));
    }
    let mut ep = Episode {
        observations: vec![Vec::with_capacity(env.horizon); n],
        actions: vec![Vec::with_capacity(env.horizon); n],
        rewards: Vec::with_capacity(env.horizon),
        z,
        true_mode: mode,
        horizon: env.horizon,
        detections: 0,
        collisions: 0,
        spawned_poachers: state.poachers.len(),
        coverage: 0.0,
        mean_entropy: 0.0,
    };
    let mut entropy_sum = 0.0;
    let mut actions = vec![Action::Stay; n];
    while !state.is_done() {
        if let LatentChoice::Inferred { encoder, commit_step, .. } = latent {
            if state.t == commit_step && !ep.is_empty() {
                let q = encoder.posterior(&encoder_features(&ep)?, 1.0)?;
                z = argmax(&q);
            }
        }
        let obs: Vec<Observation> = (0..n).map(|i| state.observe(i)).collect();
        let refs: Vec<&[f64]> = obs.iter().map(|o| &o[..]).collect();
        let lps = policies.log_probs(&refs, z);
        for (i, lp) in lps.iter().enumerate() {
            let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
            entropy_sum += entropy(&p);
            let a = if greedy { argmax(lp) } else { sample_action(lp, rng) };
            actions[i] = Action::from_index(a).unwrap();
            ep.actions[i].push(a);
        }
        for (seq, o) in ep.observations.iter_mut().zip(obs) {
            seq.push(o);
        }
        let out = state.step(&actions, rng);
        ep.rewards.push(out.team_reward);
        ep.detections += out.detections.len();
        ep.collisions += out.collisions.len();
    }
    ep.z = z;
    ep.coverage = 100.0 * state.visited_highrisk_count() as f64 / state.highrisk_count() as f64;
    ep.mean_entropy = entropy_sum / (ep.len() * n) as f64;
    Ok(ep)
}

/// Aggregate of greedy evaluation episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean_team_reward: f64,
    pub coverage_efficiency: f64,
    pub detection_rate: f64,
    pub mean_policy_entropy: f64,
    /// Against the encoder's posterior over the full episode, or a uniform
    /// belief when there is no encoder.
    pub kl_ground_truth: f64,
}

/// Greedy evaluation. With an encoder, each episode starts on latent 0 and
/// commits to the encoder's inferred latent after a tenth of the horizon.
pub fn evaluate<R: Rng + ?Sized>(
    env: &EnvConfig,
    policies: &PolicySet,
    encoder: Option<&Encoder>,
    episodes: usize,
    rng: &mut R,
) -> Result<EvalSummary> {
    if episodes == 0 {
        return Err(Error::Empty("evaluation episodes"));
    }
    let commit_step = env.horizon.div_ceil(10);
    let (mut reward, mut cov, mut ent, mut kl) = (0.0, 0.0, 0.0, 0.0);
    let (mut det, mut spawned) = (0, 0);
    for _ in 0..episodes {
        let mode = rng.gen_range(0..env.n_modes);
        let latent = match encoder {
            Some(enc) => LatentChoice::Inferred { encoder: enc, initial: 0, commit_step },
            None => LatentChoice::Fixed(0),
        };
        let ep = rollout(env, policies, latent, mode, true, rng)?;
        reward += ep.team_reward();
        cov += ep.coverage;
        ent += ep.mean_entropy;
        det += ep.detections;
        spawned += ep.spawned_poachers;
        kl += match encoder {
            Some(enc) if enc.n_latent() == env.n_modes => {
                kl_ground_truth(&enc.posterior(&encoder_features(&ep)?, 1.0)?, mode)
            }
            _ => (env.n_modes as f64).ln(),
        };
    }
    let n = episodes as f64;
    Ok(EvalSummary {
        episodes,
        mean_team_reward: reward / n,
        coverage_efficiency: cov / n,
        detection_rate: if spawned == 0 { 0.0 } else { detection_rate(det, spawned)? },
        mean_policy_entropy: ent / n,
        kl_ground_truth: kl / n,
    })
}
