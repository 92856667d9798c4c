//! Training checkpoints.
//!
//! `root/ep<NNNN>/` holds `agent<i>.params` (one per policy network),
//! `encoder.params` when the run has an encoder, `adam.state` (policy
//! optimizers followed by the encoder's), `run.txt` with the run identity
//! and environment, `history.csv` with the log so far at full precision, and
//! `rngstate.txt`. The generator state is written last, so a directory
//! without it is an interrupted write and is ignored.

use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;

use super::{Ablation, Algorithm};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::latent::Encoder;
use crate::metrics::{MetricsRecord, TrainLog, CSV_HEADER};
use crate::nn::checkpoint::{load_adam, load_params, save_adam, save_params};
use crate::nn::AdamState;
use crate::policy::{PolicyArch, PolicySet};

/// Identity of a run, enough to rebuild its networks and environment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub algorithm: Algorithm,
    pub ablation: Option<Ablation>,
    pub seed: u64,
    pub arch: PolicyArch,
    pub n_latent: usize,
    pub env: EnvConfig,
}

impl RunMeta {
    pub(crate) fn ensure_matches(&self, want: &RunMeta, dir: &Path) -> Result<()> {
        if self != want {
            return Err(Error::format(
                dir,
                format!("checkpoint was written by a different run ({self:?}, expected {want:?})"),
            ));
        }
        Ok(())
    }

    fn encode(&self) -> String {
        let e = &self.env;
        let arch = match self.arch {
            PolicyArch::PerAgent => "per_agent",
            PolicyArch::Shared => "shared",
            PolicyArch::Centralized => "centralized",
        };
        let ablation = self.ablation.map_or("none", Ablation::name);
        format!(
            "algorithm={}\nablation={ablation}\nseed={}\narch={arch}\nn_latent={}\n\
             grid_w={}\ngrid_h={}\nn_agents={}\nn_poachers={}\nn_hotspots={}\nn_modes={}\n\
             sensor_radius={}\ncomm_radius={}\nocclusion_fraction={}\nhorizon={}\nevasion_radius={}\nenv_seed={}\n",
            self.algorithm,
            self.seed,
            self.n_latent,
            e.grid_w,
            e.grid_h,
            e.n_agents,
            e.n_poachers,
            e.n_hotspots,
            e.n_modes,
            e.sensor_radius,
            e.comm_radius,
            e.occlusion_fraction,
            e.horizon,
            e.evasion_radius,
            e.seed
        )
    }

    fn decode(text: &str, path: &Path) -> Result<RunMeta> {
        let kv = KeyValues::parse(text, path)?;
        let arch = match kv.get("arch")? {
            "per_agent" => PolicyArch::PerAgent,
            "shared" => PolicyArch::Shared,
            "centralized" => PolicyArch::Centralized,
            other => return Err(Error::format(path, format!("unknown arch `{other}`"))),
        };
        let ablation = match kv.get("ablation")? {
            "none" => None,
            s => Some(s.parse().map_err(|e: Error| Error::format(path, e.to_string()))?),
        };
        Ok(RunMeta {
            algorithm: kv.get("algorithm")?.parse().map_err(|e: Error| Error::format(path, e.to_string()))?,
            ablation,
            seed: kv.num("seed")?,
            arch,
            n_latent: kv.num("n_latent")?,
            env: EnvConfig {
                grid_w: kv.num("grid_w")?,
                grid_h: kv.num("grid_h")?,
                n_agents: kv.num("n_agents")?,
                n_poachers: kv.num("n_poachers")?,
                n_hotspots: kv.num("n_hotspots")?,
                n_modes: kv.num("n_modes")?,
                sensor_radius: kv.num("sensor_radius")?,
                comm_radius: kv.num("comm_radius")?,
                occlusion_fraction: kv.num("occlusion_fraction")?,
                horizon: kv.num("horizon")?,
                evasion_radius: kv.num("evasion_radius")?,
                seed: kv.num("env_seed")?,
            },
        })
    }
}

struct KeyValues<'a> {
    pairs: Vec<(&'a str, &'a str)>,
    path: &'a Path,
}

impl<'a> KeyValues<'a> {
    fn parse(text: &'a str, path: &'a Path) -> Result<Self> {
        let pairs = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_once('=').ok_or_else(|| Error::format(path, format!("malformed line `{l}`"))))
            .collect::<Result<_>>()?;
        Ok(KeyValues { pairs, path })
    }

    fn get(&self, key: &str) -> Result<&'a str> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::format(self.path, format!("missing key `{key}`")))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse().map_err(|_| Error::format(self.path, format!("bad value `{v}` for `{key}`")))
    }
}

/// Everything restored from a checkpoint directory.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub meta: RunMeta,
    pub policies: PolicySet,
    pub adams: Vec<AdamState>,
    pub encoder: Option<(Encoder, AdamState)>,
    pub rng: ChaCha8Rng,
    pub episode: usize,
    pub log: TrainLog,
}

pub fn checkpoint_dir(root: &Path, episode: usize) -> PathBuf {
    root.join(format!("ep{episode:04}"))
}

/// The complete checkpoint with the highest episode under `root`.
pub fn latest_checkpoint(root: &Path) -> Result<Option<PathBuf>> {
    if !root.exists() {
        return Ok(None);
    }
    let mut best: Option<(usize, PathBuf)> = None;
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let path = entry.map_err(|e| Error::io(root, e))?.path();
        let Some(ep) = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix("ep"))
            .and_then(|n| n.parse::<usize>().ok())
        else {
            continue;
        };
        if path.join("rngstate.txt").is_file() && best.as_ref().is_none_or(|(b, _)| ep > *b) {
            best = Some((ep, path));
        }
    }
    Ok(best.map(|(_, p)| p))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn encode_history(log: &TrainLog) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in log {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.episode,
            r.mean_team_reward,
            r.coverage_efficiency,
            r.detection_rate,
            r.mean_policy_entropy,
            r.kl_ground_truth,
            r.elbo,
            r.temperature
        ));
    }
    out
}

fn decode_history(text: &str, path: &Path) -> Result<TrainLog> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::format(path, "bad history header"));
    }
    lines
        .map(|line| {
            let bad = || Error::format(path, format!("bad history row `{line}`"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad());
            }
            let x = |i: usize| f[i].parse::<f64>().map_err(|_| bad());
            Ok(MetricsRecord {
                episode: f[0].parse().map_err(|_| bad())?,
                mean_team_reward: x(1)?,
                coverage_efficiency: x(2)?,
                detection_rate: x(3)?,
                mean_policy_entropy: x(4)?,
                kl_ground_truth: x(5)?,
                elbo: x(6)?,
                temperature: x(7)?,
            })
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn save(
    dir: &Path,
    meta: &RunMeta,
    policies: &PolicySet,
    adams: &[AdamState],
    encoder: Option<&(Encoder, AdamState)>,
    rng: &ChaCha8Rng,
    episode: usize,
    log: &TrainLog,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let _ = fs::remove_file(dir.join("rngstate.txt"));
    for (i, net) in policies.nets().iter().enumerate() {
        save_params(net, &dir.join(format!("agent{i}.params")))?;
    }
    let mut states: Vec<&AdamState> = adams.iter().collect();
    if let Some((enc, adam)) = encoder {
        save_params(&enc.net, &dir.join("encoder.params"))?;
        states.push(adam);
    }
    save_adam(&states, &dir.join("adam.state"))?;
    write(&dir.join("run.txt"), meta.encode())?;
    write(&dir.join("history.csv"), encode_history(log))?;
    let seed: String = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
    write(
        &dir.join("rngstate.txt"),
        format!("seed={seed}\nstream={}\nword_pos={}\nepisode={episode}\n", rng.get_stream(), rng.get_word_pos()),
    )
}

/// Reads the network and run identity only, for evaluation.
pub fn load_policies(dir: &Path) -> Result<(RunMeta, PolicySet, Option<Encoder>)> {
    let run = dir.join("run.txt");
    let meta = RunMeta::decode(&read(&run)?, &run)?;
    let count = match meta.arch {
        PolicyArch::PerAgent => meta.env.n_agents,
        _ => 1,
    };
    let nets = (0..count)
        .map(|i| load_params(&dir.join(format!("agent{i}.params"))))
        .collect::<Result<Vec<_>>>()?;
    let policies = PolicySet::from_nets(meta.arch, meta.env.n_agents, meta.n_latent, crate::env::OBS_DIM, nets)
        .map_err(|e| Error::format(dir, e.to_string()))?;
    let encoder = if meta.has_encoder() {
        let net = load_params(&dir.join("encoder.params"))?;
        if net.dims().n_out != meta.n_latent {
            return Err(Error::format(dir, "encoder output does not match the latent count"));
        }
        Some(Encoder { net })
    } else {
        None
    };
    Ok((meta, policies, encoder))
}

pub(crate) fn load(dir: &Path) -> Result<Checkpoint> {
    use rand::SeedableRng;

    let (meta, policies, encoder) = load_policies(dir)?;
    let adam_path = dir.join("adam.state");
    let mut adams = load_adam(&adam_path)?;
    let expected = policies.nets().len() + encoder.is_some() as usize;
    if adams.len() != expected {
        return Err(Error::format(&adam_path, format!("expected {expected} optimizer states, found {}", adams.len())));
    }
    let encoder = encoder.map(|e| (e, adams.pop().unwrap()));
    for (a, n) in adams.iter().zip(policies.nets()) {
        if a.m.len() != n.dims().len() {
            return Err(Error::format(&adam_path, "optimizer state does not match its network"));
        }
    }

    let rng_path = dir.join("rngstate.txt");
    let text = read(&rng_path)?;
    let kv = KeyValues::parse(&text, &rng_path)?;
    let hex = kv.get("seed")?;
    if hex.len() != 64 {
        return Err(Error::format(&rng_path, "seed must be 64 hex digits"));
    }
    let mut seed = [0u8; 32];
    for (i, b) in seed.iter_mut().enumerate() {
        *b = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).map_err(|_| Error::format(&rng_path, "bad seed"))?;
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(kv.num("stream")?);
    rng.set_word_pos(kv.num("word_pos")?);
    let episode = kv.num("episode")?;

    let hist = dir.join("history.csv");
    let log = decode_history(&read(&hist)?, &hist)?;
    Ok(Checkpoint { meta, policies, adams, encoder, rng, episode, log })
}
