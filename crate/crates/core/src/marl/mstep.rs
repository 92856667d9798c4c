use super::{returns, BaselineMode, TrainConfig, TrajectoryBatch};
use crate::error::{Error, Result};
use crate::latent::LatentPosterior;
use crate::nn::AdamState;
use crate::policy::PolicySet;

#[derive(Debug, Clone, PartialEq)]
pub struct MStepDiagnostics {
    /// L2 norm of the ascent direction per network.
    pub grad_norms: Vec<f64>,
    /// Posterior-weighted mean action entropy over the batch.
    pub mean_entropy: f64,
    /// Set when a non-finite gradient aborted the update.
    pub dropped: bool,
}

/// Per-step baseline. `BatchMean` averages the reward-to-go of every
/// episode in the batch that reached step `t`.
fn baselines(rtg: &[Vec<f64>], mode: BaselineMode) -> Vec<f64> {
    let longest = rtg.iter().map(Vec::len).max().unwrap_or(0);
    match mode {
        BaselineMode::None => vec![0.0; longest],
        BaselineMode::BatchMean => (0..longest)
            .map(|t| {
                let (s, n) = rtg
                    .iter()
                    .filter_map(|r| r.get(t))
                    .fold((0.0, 0.0), |(s, n), r| (s + r, n + 1.0));
                s / n
            })
            .collect(),
    }
}

/// Posterior-weighted REINFORCE gradient of the batch, normalised by the
/// number of transitions. Returns per-network gradients (ascent direction)
/// and the weighted mean entropy.
pub fn policy_gradient(
    batch: &TrajectoryBatch,
    posteriors: &[LatentPosterior],
    policies: &PolicySet,
    cfg: &TrainConfig,
) -> Result<(Vec<Vec<f64>>, f64)> {
    if batch.is_empty() {
        return Err(Error::Empty("trajectory batch"));
    }
    if posteriors.len() != batch.len() {
        return Err(Error::Dimension { expected: batch.len(), got: posteriors.len() });
    }
    let rtg: Vec<Vec<f64>> = batch.iter().map(|ep| returns(&ep.rewards, cfg.gamma)).collect();
    let base = baselines(&rtg, cfg.baseline);
    let steps: usize = batch.iter().map(|ep| ep.len()).sum();
    if steps == 0 {
        return Err(Error::Empty("trajectory batch"));
    }
    let scale = 1.0 / steps as f64;
    let mut grads = policies.zero_grads();
    let mut entropy = 0.0;
    for ((ep, post), r) in batch.iter().zip(posteriors).zip(&rtg) {
        if post.k() != policies.n_latent() {
            return Err(Error::Dimension { expected: policies.n_latent(), got: post.k() });
        }
        for t in 0..ep.len() {
            let obs = ep.joint_obs(t);
            let acts = ep.joint_actions(t);
            let adv = r[t] - base[t];
            for (k, &q) in post.probs.iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                let w = q * scale;
                entropy += w * policies.accumulate_grad(&obs, &acts, k, w * adv, w * cfg.entropy_bonus, &mut grads);
            }
        }
    }
    Ok((grads, entropy))
}

/// One Adam ascent step per network on the posterior-weighted policy
/// gradient. A batch whose gradient is not finite leaves every parameter
/// untouched and comes back with `dropped` set.
pub fn m_step_update(
    batch: &TrajectoryBatch,
    posteriors: &[LatentPosterior],
    policies: &mut PolicySet,
    adams: &mut [AdamState],
    cfg: &TrainConfig,
) -> Result<MStepDiagnostics> {
    if adams.len() != policies.nets().len() {
        return Err(Error::Dimension { expected: policies.nets().len(), got: adams.len() });
    }
    let (mut grads, mean_entropy) = policy_gradient(batch, posteriors, policies, cfg)?;
    let grad_norms: Vec<f64> = grads.iter().map(|g| g.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    if grad_norms.iter().any(|n| !n.is_finite()) {
        return Ok(MStepDiagnostics { grad_norms, mean_entropy, dropped: true });
    }
    for ((net, adam), g) in policies.nets_mut().iter_mut().zip(adams).zip(&mut grads) {
        // Adam descends; negate for ascent.
        for x in g.iter_mut() {
            *x = -*x;
        }
        adam.step(net.flat_mut(), g)?;
    }
    Ok(MStepDiagnostics { grad_norms, mean_entropy, dropped: false })
}
