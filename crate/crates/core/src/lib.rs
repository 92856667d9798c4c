//! Latent-mode multi-agent patrol learning.
//!
//! A team of UAV agents patrols a grid world whose poacher behaviour is
//! governed by a hidden scenario mode. Policies are conditioned on a
//! categorical latent, the posterior over that latent is computed exactly per
//! episode and distilled into an amortized encoder, and the policies are
//! trained by a posterior-weighted policy gradient.
//!
//! Module map:
//! - [`env`] grid world, observations and dynamics
//! - [`nn`] the small MLP, Adam and parameter files
//! - [`policy`] latent-conditioned policy sets
//! - [`latent`] posterior, ELBO, encoder and temperature schedule
//! - [`marl`] rollouts, M-step and the training loop
//! - [`metrics`] evaluation metrics and the metrics CSV

pub mod env;
pub mod error;
pub mod latent;
pub mod marl;
pub mod metrics;
pub mod nn;
pub mod policy;

#[cfg(test)]
mod testutil;

pub use env::{Action, Cell, EnvConfig, Observation, WorldState};
pub use error::{Error, Result};
pub use latent::{Encoder, LatentPosterior, TemperatureSchedule};
pub use marl::{Ablation, Algorithm, BaselineMode, Episode, TrainConfig, Trainer, TrajectoryBatch};
pub use metrics::{MetricsRecord, TrainLog};
pub use nn::{AdamState, MlpDims, MlpParams};
pub use policy::{PolicyArch, PolicySet};
