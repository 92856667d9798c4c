//! Evaluation metrics and the per-run metrics CSV.

mod csv;

use std::collections::BTreeSet;

use crate::env::Cell;
use crate::error::{Error, Result};
use crate::nn::entropy;
use crate::policy::PolicySet;

pub use self::csv::{format_csv, read_csv, write_csv, CSV_HEADER};

/// Upper bound reported by [`kl_ground_truth`] when `q(true_mode)` underflows.
pub const KL_CLAMP: f64 = 50.0;

/// One evaluation point of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub episode: usize,
    pub mean_team_reward: f64,
    /// Percent.
    pub coverage_efficiency: f64,
    /// Percent.
    pub detection_rate: f64,
    /// Nats.
    pub mean_policy_entropy: f64,
    /// Nats.
    pub kl_ground_truth: f64,
    pub elbo: f64,
    pub temperature: f64,
}

pub type TrainLog = Vec<MetricsRecord>;

pub fn coverage_efficiency(visited: &BTreeSet<Cell>, highrisk: &BTreeSet<Cell>) -> Result<f64> {
    if highrisk.is_empty() {
        return Err(Error::Empty("high-risk set"));
    }
    let hit = visited.intersection(highrisk).count();
    Ok(100.0 * hit as f64 / highrisk.len() as f64)
}

pub fn detection_rate(detections: usize, spawned: usize) -> Result<f64> {
    if spawned == 0 {
        return Err(Error::Empty("spawned poachers"));
    }
    Ok(100.0 * detections as f64 / spawned as f64)
}

/// Mean action entropy over every `(agent, observation, z)` in the sample.
/// `obs[s]` is a joint observation and `z[s]` its latent.
pub fn policy_entropy(policies: &PolicySet, obs: &[Vec<&[f64]>], z: &[usize]) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::Empty("observation sample"));
    }
    let mut total = 0.0;
    let mut n = 0.0;
    for (joint, &zs) in obs.iter().zip(z) {
        for lp in policies.log_probs(joint, zs) {
            let p: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
            total += entropy(&p);
            n += 1.0;
        }
    }
    Ok(total / n)
}

/// `KL(delta_true || q) = -log q(true_mode)`, clamped at [`KL_CLAMP`].
pub fn kl_ground_truth(q: &[f64], true_mode: usize) -> f64 {
    let p = q[true_mode];
    if p <= 0.0 {
        return KL_CLAMP;
    }
    // Adding +0.0 turns the -0.0 of ln(1) into +0.0.
    (-p.ln()).clamp(0.0, KL_CLAMP) + 0.0
}
