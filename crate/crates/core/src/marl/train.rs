use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{self, RunMeta};
use super::{m_step_update, rollout, Ablation, Algorithm, LatentChoice, TrainConfig, TrajectoryBatch};
use crate::env::EnvConfig;
use crate::error::Result;
use crate::latent::{encoder_features, exact_posterior, log_likelihoods, Encoder, LatentPosterior};
use crate::metrics::{kl_ground_truth, MetricsRecord, TrainLog};
use crate::nn::{AdamState, HIDDEN_WIDTH};
use crate::policy::{PolicyArch, PolicySet};

/// Generator streams derived from a run seed.
const POLICY_STREAM: u64 = 0;
const ENCODER_STREAM: u64 = 1;
const ROLLOUT_STREAM: u64 = 2;

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Default)]
struct Window {
    episodes: usize,
    reward: f64,
    coverage: f64,
    entropy: f64,
    kl: f64,
    elbo: f64,
    detections: usize,
    spawned: usize,
    temperature: f64,
}

impl Window {
    fn record(&self, episode: usize) -> MetricsRecord {
        let n = self.episodes as f64;
        MetricsRecord {
            episode,
            mean_team_reward: self.reward / n,
            coverage_efficiency: self.coverage / n,
            detection_rate: if self.spawned == 0 { 0.0 } else { 100.0 * self.detections as f64 / self.spawned as f64 },
            mean_policy_entropy: self.entropy / n,
            kl_ground_truth: self.kl / n,
            elbo: self.elbo / n,
            temperature: self.temperature,
        }
    }
}

/// A single seeded training run.
///
/// Training rollouts condition every policy on the true scenario mode; the
/// exact E-step and the encoder learn to recover it from behaviour, which
/// is what evaluation relies on.
#[derive(Debug, Clone)]
pub struct Trainer {
    env: EnvConfig,
    cfg: TrainConfig,
    meta: RunMeta,
    policies: PolicySet,
    adams: Vec<AdamState>,
    encoder: Option<(Encoder, AdamState)>,
    rng: ChaCha8Rng,
    episode: usize,
    log: TrainLog,
    window: Window,
}

impl Trainer {
    pub fn new(env: &EnvConfig, cfg: &TrainConfig, seed: u64, ablation: Option<Ablation>) -> Result<Self> {
        env.validate()?;
        cfg.validate()?;
        let meta = RunMeta::new(env, cfg, seed, ablation);
        let policies = PolicySet::new(meta.arch, env.n_agents, meta.n_latent, HIDDEN_WIDTH, &mut stream(seed, POLICY_STREAM));
        let adams = policies
            .nets()
            .iter()
            .map(|n| AdamState::with_lr(n.dims().len(), cfg.learning_rate))
            .collect();
        let encoder = meta.has_encoder().then(|| {
            let enc = Encoder::new(env.n_agents, meta.n_latent, &mut stream(seed, ENCODER_STREAM));
            let adam = AdamState::with_lr(enc.net.dims().len(), cfg.learning_rate);
            (enc, adam)
        });
        Ok(Trainer {
            env: env.clone(),
            cfg: cfg.clone(),
            meta,
            policies,
            adams,
            encoder,
            rng: stream(seed, ROLLOUT_STREAM),
            episode: 0,
            log: TrainLog::new(),
            window: Window::default(),
        })
    }

    /// Restores the most recent checkpoint under `root`, or starts fresh
    /// when there is none.
    pub fn resume(root: &Path, env: &EnvConfig, cfg: &TrainConfig, seed: u64, ablation: Option<Ablation>) -> Result<Self> {
        let mut trainer = Trainer::new(env, cfg, seed, ablation)?;
        if let Some(dir) = checkpoint::latest_checkpoint(root)? {
            let ck = checkpoint::load(&dir)?;
            ck.meta.ensure_matches(&trainer.meta, &dir)?;
            trainer.policies = ck.policies;
            trainer.adams = ck.adams;
            trainer.encoder = ck.encoder;
            trainer.rng = ck.rng;
            trainer.episode = ck.episode;
            trainer.log = ck.log;
        }
        Ok(trainer)
    }

    pub fn policies(&self) -> &PolicySet {
        &self.policies
    }

    pub fn encoder(&self) -> Option<&Encoder> {
        self.encoder.as_ref().map(|(e, _)| e)
    }

    pub fn log(&self) -> &TrainLog {
        &self.log
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn is_finished(&self) -> bool {
        self.episode >= self.cfg.episodes
    }

    pub fn into_log(self) -> TrainLog {
        self.log
    }

    /// Writes the current state to `root/ep<NNNN>/`. Only valid at an
    /// evaluation point, where no partial window is pending.
    pub fn save_checkpoint(&self, root: &Path) -> Result<()> {
        if self.window.episodes > 0 {
            return Err(crate::error::Error::InvalidConfig(format!(
                "checkpoint requested mid-window at episode {}",
                self.episode
            )));
        }
        checkpoint::save(
            &checkpoint::checkpoint_dir(root, self.episode),
            &self.meta,
            &self.policies,
            &self.adams,
            self.encoder.as_ref(),
            &self.rng,
            self.episode,
            &self.log,
        )
    }

    /// Collects one batch and applies the E- and M-steps. Batches never
    /// straddle an evaluation boundary. Returns the record logged at the
    /// end of this batch, if any.
    pub fn step_batch(&mut self) -> Result<Option<MetricsRecord>> {
        let every = self.cfg.eval_every;
        let boundary = ((self.episode / every + 1) * every).min(self.cfg.episodes);
        let n = self.cfg.batch_episodes.min(boundary - self.episode);
        let tau = self.cfg.temperature.anneal(self.episode, self.cfg.episodes);

        let batch: TrajectoryBatch = (0..n)
            .map(|_| {
                let mode = self.rng.gen_range(0..self.env.n_modes);
                let z = if self.meta.n_latent == 1 { 0 } else { mode };
                rollout(&self.env, &self.policies, LatentChoice::Fixed(z), mode, false, &mut self.rng)
            })
            .collect::<Result<_>>()?;

        let posteriors: Vec<LatentPosterior> = match self.meta.ablation {
            Some(Ablation::NoEncoder) => batch
                .iter()
                .map(|ep| LatentPosterior::uniform(self.meta.n_latent, log_likelihoods(ep, &self.policies)))
                .collect(),
            _ => batch.iter().map(|ep| exact_posterior(ep, &self.policies, tau)).collect::<Result<_>>()?,
        };

        if let Some((enc, adam)) = &mut self.encoder {
            let targets = batch
                .iter()
                .zip(&posteriors)
                .map(|(ep, q)| Ok((encoder_features(ep)?, q.probs.clone())))
                .collect::<Result<Vec<_>>>()?;
            enc.estep_update(&targets, adam, tau)?;
        }

        if self.meta.ablation != Some(Ablation::FrozenMStep) {
            m_step_update(&batch, &posteriors, &mut self.policies, &mut self.adams, &self.cfg)?;
        }

        let uniform_kl = (self.env.n_modes as f64).ln();
        for (ep, q) in batch.iter().zip(&posteriors) {
            let w = &mut self.window;
            w.episodes += 1;
            w.reward += ep.team_reward();
            w.coverage += ep.coverage;
            w.entropy += ep.mean_entropy;
            w.detections += ep.detections;
            w.spawned += ep.spawned_poachers;
            w.elbo += q.elbo();
            w.kl += if q.k() == self.env.n_modes { kl_ground_truth(&q.probs, ep.true_mode) } else { uniform_kl };
        }
        self.window.temperature = tau;
        self.episode += n;

        if self.episode == boundary {
            let rec = std::mem::take(&mut self.window).record(self.episode);
            self.log.push(rec.clone());
            return Ok(Some(rec));
        }
        Ok(None)
    }

    /// Trains to completion, checkpointing at every evaluation point when
    /// `ckpt_root` is given.
    pub fn run(&mut self, ckpt_root: Option<&Path>) -> Result<&TrainLog> {
        while !self.is_finished() {
            if self.step_batch()?.is_some() {
                if let Some(root) = ckpt_root {
                    self.save_checkpoint(root)?;
                }
            }
        }
        Ok(&self.log)
    }
}

/// Trains `cfg.algorithm` on `env` with one seed.
pub fn train(cfg: &TrainConfig, env: &EnvConfig, seed: u64) -> Result<TrainLog> {
    let mut t = Trainer::new(env, cfg, seed, None)?;
    t.run(None)?;
    Ok(t.into_log())
}

/// As [`train`] with one component of the EM loop disabled.
pub fn ablate(cfg: &TrainConfig, env: &EnvConfig, seed: u64, which: Ablation) -> Result<TrainLog> {
    let mut t = Trainer::new(env, cfg, seed, Some(which))?;
    t.run(None)?;
    Ok(t.into_log())
}

impl RunMeta {
    pub(crate) fn new(env: &EnvConfig, cfg: &TrainConfig, seed: u64, ablation: Option<Ablation>) -> Self {
        let arch = match (cfg.algorithm, cfg.shared_params) {
            (Algorithm::CentralizedPg, _) => PolicyArch::Centralized,
            (_, true) => PolicyArch::Shared,
            (_, false) => PolicyArch::PerAgent,
        };
        let n_latent = if cfg.algorithm == Algorithm::EmPg { env.n_modes } else { 1 };
        RunMeta { algorithm: cfg.algorithm, ablation, seed, arch, n_latent, env: env.clone() }
    }

    pub(crate) fn has_encoder(&self) -> bool {
        self.algorithm == Algorithm::EmPg && self.ablation != Some(Ablation::NoEncoder)
    }
}
