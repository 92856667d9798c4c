//! Latent-conditioned agent policies.
//!
//! Each policy maps an observation with the latent one-hot appended to a
//! softmax over the six actions. The centralized variant is a single
//! network reading every agent's observation and emitting one six-way head
//! per agent.

use rand::Rng;

use crate::env::{Action, OBS_DIM};
use crate::error::{Error, Result};
use crate::nn::{entropy, entropy_logit_grad, log_softmax, MlpDims, MlpParams, HIDDEN_WIDTH};

const N_ACTIONS: usize = Action::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyArch {
    /// One network per agent.
    PerAgent,
    /// One network used by every agent.
    Shared,
    /// One network over the joint observation with a head per agent.
    Centralized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    arch: PolicyArch,
    n_agents: usize,
    n_latent: usize,
    obs_dim: usize,
    nets: Vec<MlpParams>,
}

impl PolicySet {
    pub fn new<R: Rng + ?Sized>(
        arch: PolicyArch,
        n_agents: usize,
        n_latent: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let dims = Self::dims_for(arch, n_agents, n_latent, OBS_DIM, hidden);
        let count = Self::net_count(arch, n_agents);
        let nets = (0..count).map(|_| MlpParams::init(dims, rng)).collect();
        PolicySet { arch, n_agents, n_latent, obs_dim: OBS_DIM, nets }
    }

    pub fn with_default_width<R: Rng + ?Sized>(
        arch: PolicyArch,
        n_agents: usize,
        n_latent: usize,
        rng: &mut R,
    ) -> Self {
        Self::new(arch, n_agents, n_latent, HIDDEN_WIDTH, rng)
    }

    /// Wraps existing networks, checking their shapes.
    pub fn from_nets(
        arch: PolicyArch,
        n_agents: usize,
        n_latent: usize,
        obs_dim: usize,
        nets: Vec<MlpParams>,
    ) -> Result<Self> {
        if nets.len() != Self::net_count(arch, n_agents) {
            return Err(Error::Dimension {
                expected: Self::net_count(arch, n_agents),
                got: nets.len(),
            });
        }
        let hidden = nets[0].dims().n_hidden;
        let want = Self::dims_for(arch, n_agents, n_latent, obs_dim, hidden);
        for n in &nets {
            if n.dims() != want {
                return Err(Error::InvalidConfig(format!(
                    "policy network shape {:?} does not match {:?}",
                    n.dims(),
                    want
                )));
            }
        }
        Ok(PolicySet { arch, n_agents, n_latent, obs_dim, nets })
    }

    fn net_count(arch: PolicyArch, n_agents: usize) -> usize {
        match arch {
            PolicyArch::PerAgent => n_agents,
            PolicyArch::Shared | PolicyArch::Centralized => 1,
        }
    }

    fn dims_for(arch: PolicyArch, n_agents: usize, n_latent: usize, obs: usize, hidden: usize) -> MlpDims {
        match arch {
            PolicyArch::PerAgent | PolicyArch::Shared => MlpDims::new(obs + n_latent, hidden, N_ACTIONS),
            PolicyArch::Centralized => MlpDims::new(obs * n_agents + n_latent, hidden, N_ACTIONS * n_agents),
        }
    }

    pub fn arch(&self) -> PolicyArch {
        self.arch
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_latent(&self) -> usize {
        self.n_latent
    }

    pub fn nets(&self) -> &[MlpParams] {
        &self.nets
    }

    pub fn nets_mut(&mut self) -> &mut [MlpParams] {
        &mut self.nets
    }

    fn with_latent(&self, parts: &[&[f64]], z: usize) -> Vec<f64> {
        let mut x = Vec::with_capacity(parts.len() * self.obs_dim + self.n_latent);
        for p in parts {
            x.extend_from_slice(p);
        }
        let base = x.len();
        x.resize(base + self.n_latent, 0.0);
        x[base + z] = 1.0;
        x
    }

    /// Log-probabilities of every action for every agent given the joint
    /// observation `obs[agent]` and latent `z`.
    pub fn log_probs(&self, obs: &[&[f64]], z: usize) -> Vec<[f64; N_ACTIONS]> {
        debug_assert_eq!(obs.len(), self.n_agents);
        debug_assert!(z < self.n_latent);
        let to_arr = |v: &[f64]| -> [f64; N_ACTIONS] { v.try_into().unwrap() };
        match self.arch {
            PolicyArch::PerAgent | PolicyArch::Shared => obs
                .iter()
                .enumerate()
                .map(|(i, o)| {
                    let net = &self.nets[if self.arch == PolicyArch::PerAgent { i } else { 0 }];
                    to_arr(&log_softmax(&net.forward(&self.with_latent(&[o], z)), 1.0))
                })
                .collect(),
            PolicyArch::Centralized => {
                let logits = self.nets[0].forward(&self.with_latent(obs, z));
                logits.chunks_exact(N_ACTIONS).map(|h| to_arr(&log_softmax(h, 1.0))).collect()
            }
        }
    }

    /// `sum_i log pi_i(actions[i] | obs[i], z)`.
    pub fn joint_log_prob(&self, obs: &[&[f64]], actions: &[usize], z: usize) -> f64 {
        self.log_probs(obs, z)
            .iter()
            .zip(actions)
            .map(|(lp, &a)| lp[a])
            .sum()
    }

    /// Adds `weight * grad log pi(actions | obs, z) + entropy_weight * grad H`
    /// for every agent into `grads` (one buffer per network). Returns the
    /// mean per-agent entropy at this input.
    pub fn accumulate_grad(
        &self,
        obs: &[&[f64]],
        actions: &[usize],
        z: usize,
        weight: f64,
        entropy_weight: f64,
        grads: &mut [Vec<f64>],
    ) -> f64 {
        let head_grad = |logits: &[f64], a: usize, out: &mut Vec<f64>| -> f64 {
            let lp = log_softmax(logits, 1.0);
            let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
            let dh = entropy_logit_grad(&p);
            for j in 0..N_ACTIONS {
                let onehot = (j == a) as u8 as f64;
                out.push(weight * (onehot - p[j]) + entropy_weight * dh[j]);
            }
            entropy(&p)
        };
        match self.arch {
            PolicyArch::PerAgent | PolicyArch::Shared => {
                let mut h_sum = 0.0;
                for (i, o) in obs.iter().enumerate() {
                    let n = if self.arch == PolicyArch::PerAgent { i } else { 0 };
                    let x = self.with_latent(&[o], z);
                    let cache = self.nets[n].forward_cached(&x);
                    let mut dl = Vec::with_capacity(N_ACTIONS);
                    h_sum += head_grad(&cache.logits, actions[i], &mut dl);
                    self.nets[n].backward_into(&x, &cache, &dl, 1.0, &mut grads[n]);
                }
                h_sum / obs.len() as f64
            }
            PolicyArch::Centralized => {
                let x = self.with_latent(obs, z);
                let cache = self.nets[0].forward_cached(&x);
                let mut dl = Vec::with_capacity(N_ACTIONS * self.n_agents);
                let mut h_sum = 0.0;
                for (i, head) in cache.logits.chunks_exact(N_ACTIONS).enumerate() {
                    h_sum += head_grad(head, actions[i], &mut dl);
                }
                self.nets[0].backward_into(&x, &cache, &dl, 1.0, &mut grads[0]);
                h_sum / self.n_agents as f64
            }
        }
    }

    pub fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.nets.iter().map(|n| vec![0.0; n.dims().len()]).collect()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_obs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..OBS_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn log_probs_normalised_for_every_arch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for arch in [PolicyArch::PerAgent, PolicyArch::Shared, PolicyArch::Centralized] {
            let ps = PolicySet::new(arch, 3, 2, 8, &mut rng);
            let obs = random_obs(&mut rng, 3);
            let refs: Vec<&[f64]> = obs.iter().map(|o| o.as_slice()).collect();
            for lp in ps.log_probs(&refs, 1) {
                let s: f64 = lp.iter().map(|l| l.exp()).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for arch in [PolicyArch::PerAgent, PolicyArch::Shared, PolicyArch::Centralized] {
            let mut ps = PolicySet::new(arch, 2, 3, 5, &mut rng);
            let obs = random_obs(&mut rng, 2);
            let refs: Vec<&[f64]> = obs.iter().map(|o| o.as_slice()).collect();
            let actions = [1, 4];
            let (w, ew) = (0.7, 0.3);
            let objective = |ps: &PolicySet| {
                let lps = ps.log_probs(&refs, 2);
                let h: f64 = lps.iter().map(|lp| -lp.iter().map(|l| l.exp() * l).sum::<f64>()).sum();
                w * ps.joint_log_prob(&refs, &actions, 2) + ew * h
            };
            let mut grads = ps.zero_grads();
            ps.accumulate_grad(&refs, &actions, 2, w, ew, &mut grads);
            for n in 0..ps.nets.len() {
                for k in (0..grads[n].len()).step_by(37) {
                    let orig = ps.nets[n].flat()[k];
                    ps.nets[n].flat_mut()[k] = orig + 1e-6;
                    let up = objective(&ps);
                    ps.nets[n].flat_mut()[k] = orig - 1e-6;
                    let down = objective(&ps);
                    ps.nets[n].flat_mut()[k] = orig;
                    let fd = (up - down) / 2e-6;
                    assert!((fd - grads[n][k]).abs() < 1e-6, "{arch:?} net {n} param {k}: {fd} vs {}", grads[n][k]);
                }
            }
        }
    }

    #[test]
    fn from_nets_checks_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ps = PolicySet::new(PolicyArch::PerAgent, 2, 2, 4, &mut rng);
        assert!(PolicySet::from_nets(PolicyArch::PerAgent, 2, 2, OBS_DIM, ps.nets.clone()).is_ok());
        assert!(PolicySet::from_nets(PolicyArch::PerAgent, 2, 3, OBS_DIM, ps.nets.clone()).is_err());
        assert!(PolicySet::from_nets(PolicyArch::PerAgent, 3, 2, OBS_DIM, ps.nets.clone()).is_err());
    }
}
