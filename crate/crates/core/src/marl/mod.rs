//! Rollouts, the policy-gradient M-step and the EM training loop.

mod checkpoint;
mod mstep;
mod rollout;
mod train;
mod trajectory;

pub use checkpoint::{checkpoint_dir, latest_checkpoint, load_policies, Checkpoint, RunMeta};
pub use mstep::{m_step_update, MStepDiagnostics};
pub use rollout::{evaluate, rollout, sample_action, EvalSummary, LatentChoice};
pub use train::{ablate, train, Trainer};
pub use trajectory::{Episode, TrajectoryBatch};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::latent::TemperatureSchedule;
use crate::nn::LEARNING_RATE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Latent-conditioned per-agent policies trained by EM.
    EmPg,
    /// Per-agent policies without a latent.
    IndependentPg,
    /// One joint policy over all observations, without a latent.
    CentralizedPg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    /// M-step weights every latent uniformly instead of using the posterior.
    NoEncoder,
    /// Policies are never updated.
    FrozenMStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    None,
    /// Subtract the mean reward-to-go at each step index across the batch.
    BatchMean,
}

macro_rules! named_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    _ => Err(Error::InvalidConfig(format!(
                        concat!("unknown ", stringify!($ty), " `{}`, expected one of: ", $($name, " "),+),
                        s
                    ))),
                }
            }
        }
    };
}

named_enum!(Algorithm { EmPg => "em_pg", IndependentPg => "independent_pg", CentralizedPg => "centralized_pg" });
named_enum!(Ablation { NoEncoder => "no_encoder", FrozenMStep => "frozen_m_step" });
named_enum!(BaselineMode { None => "none", BatchMean => "batch_mean" });

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    pub batch_episodes: usize,
    pub gamma: f64,
    pub learning_rate: f64,
    pub entropy_bonus: f64,
    pub eval_every: usize,
    pub seeds: Vec<u64>,
    pub baseline: BaselineMode,
    pub algorithm: Algorithm,
    pub temperature: TemperatureSchedule,
    /// One policy network for all agents instead of one each.
    pub shared_params: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 5000,
            batch_episodes: 8,
            gamma: 0.99,
            learning_rate: LEARNING_RATE,
            entropy_bonus: 0.01,
            eval_every: 100,
            seeds: (0..5).collect(),
            baseline: BaselineMode::BatchMean,
            algorithm: Algorithm::EmPg,
            temperature: TemperatureSchedule::default(),
            shared_params: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.episodes < 1 {
            return bad("episodes must be at least 1".into());
        }
        if self.batch_episodes < 1 {
            return bad("batch_episodes must be at least 1".into());
        }
        if self.eval_every < 1 {
            return bad("eval_every must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.entropy_bonus >= 0.0) {
            return bad(format!("entropy_bonus must be non-negative, got {}", self.entropy_bonus));
        }
        if !self.temperature.is_valid() {
            return bad(format!("invalid temperature schedule {:?}", self.temperature));
        }
        Ok(())
    }
}

/// Discounted reward-to-go, `R_t = sum_{u >= t} gamma^(u - t) r_u`.
pub fn returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (o, r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *o = acc;
    }
    out
}
