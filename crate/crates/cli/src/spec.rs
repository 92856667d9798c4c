//! Run specification files.
//!
//! A spec is a TOML document with three tables:
//!
//! ```toml
//! [env]
//! grid_w = 15            # required, cells
//! grid_h = 15            # required, cells
//! n_agents = 4
//!
//! [train]
//! algorithm = "em_pg"
//! episodes = 2000
//!
//! [run]
//! seeds = [0, 1, 2, 3, 4]
//! out = "out"
//! ```
//!
//! Every key other than `env.grid_w` and `env.grid_h` is optional. Unknown
//! tables and keys are rejected so typos cannot silently fall back to a
//! default. See the README for the full key reference.

use std::path::{Path, PathBuf};

use patrol_core::{Algorithm, BaselineMode, EnvConfig, TrainConfig};
use toml::{Table, Value};

use crate::error::{CliError, Result};

const ENV_KEYS: &[&str] = &[
    "grid_w",
    "grid_h",
    "n_agents",
    "n_poachers",
    "n_hotspots",
    "n_modes",
    "sensor_radius",
    "comm_radius",
    "occlusion_fraction",
    "horizon",
    "evasion_radius",
    "seed",
];
const TRAIN_KEYS: &[&str] = &[
    "algorithm",
    "episodes",
    "batch_episodes",
    "gamma",
    "learning_rate",
    "entropy_bonus",
    "eval_every",
    "baseline",
    "shared_params",
    "tau_start",
    "tau_end",
    "anneal_fraction",
];
const RUN_KEYS: &[&str] = &["seeds", "out"];

pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub env: EnvConfig,
    /// Also carries the seed list.
    pub train: TrainConfig,
    pub out: PathBuf,
}

/// Command-line values that take precedence over the spec file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub algorithm: Option<Algorithm>,
    pub episodes: Option<usize>,
    pub batch_episodes: Option<usize>,
    pub eval_every: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
}

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn get(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> String {
        format!("{}.{key}: {msg}", self.name)
    }

    fn required_usize(&self, key: &str) -> std::result::Result<usize, String> {
        match self.get(key) {
            None => Err(self.err(key, "missing required key")),
            Some(v) => self.as_usize(key, v),
        }
    }

    fn as_usize(&self, key: &str, v: &Value) -> std::result::Result<usize, String> {
        match v.as_integer() {
            Some(i) if i >= 0 => Ok(i as usize),
            _ => Err(self.err(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> std::result::Result<usize, String> {
        self.get(key).map_or(Ok(default), |v| self.as_usize(key, v))
    }

    fn u64(&self, key: &str, default: u64) -> std::result::Result<u64, String> {
        Ok(self.usize(key, default as usize)? as u64)
    }

    fn f64(&self, key: &str, default: f64) -> std::result::Result<f64, String> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Float(f)) => Ok(*f),
            Some(Value::Integer(i)) => Ok(*i as f64),
            Some(v) => Err(self.err(key, format!("expected a number, got {v}"))),
        }
    }

    fn bool(&self, key: &str, default: bool) -> std::result::Result<bool, String> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(self.err(key, format!("expected true or false, got {v}"))),
        }
    }

    fn str(&self, key: &str) -> std::result::Result<Option<&'a str>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(self.err(key, format!("expected a string, got {v}"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> std::result::Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.str(key)? {
            None => Ok(default),
            Some(s) => s.parse().map_err(|e| self.err(key, e)),
        }
    }
}

fn check_keys(doc: &Table) -> std::result::Result<(), String> {
    for (name, value) in doc {
        let allowed = match name.as_str() {
            "env" => ENV_KEYS,
            "train" => TRAIN_KEYS,
            "run" => RUN_KEYS,
            _ => return Err(format!("unknown table `{name}`, expected env, train or run")),
        };
        let Some(table) = value.as_table() else {
            return Err(format!("`{name}` must be a table"));
        };
        if let Some(key) = table.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(format!("{name}.{key}: unknown key"));
        }
    }
    Ok(())
}

fn section<'a>(doc: &'a Table, name: &'static str) -> Section<'a> {
    Section { name, table: doc.get(name).and_then(Value::as_table) }
}

fn from_table(doc: &Table) -> std::result::Result<RunSpec, String> {
    check_keys(doc)?;
    let s = section(doc, "env");
    let d = EnvConfig::default();
    let env = EnvConfig {
        grid_w: s.required_usize("grid_w")?,
        grid_h: s.required_usize("grid_h")?,
        n_agents: s.usize("n_agents", d.n_agents)?,
        n_poachers: s.usize("n_poachers", d.n_poachers)?,
        n_hotspots: s.usize("n_hotspots", d.n_hotspots)?,
        n_modes: s.usize("n_modes", d.n_modes)?,
        sensor_radius: s.usize("sensor_radius", d.sensor_radius)?,
        comm_radius: s.usize("comm_radius", d.comm_radius)?,
        occlusion_fraction: s.f64("occlusion_fraction", d.occlusion_fraction)?,
        horizon: s.usize("horizon", d.horizon)?,
        evasion_radius: s.usize("evasion_radius", d.evasion_radius)?,
        seed: s.u64("seed", d.seed)?,
    };

    let s = section(doc, "train");
    let d = TrainConfig::default();
    let mut train = TrainConfig {
        algorithm: s.parsed("algorithm", d.algorithm)?,
        episodes: s.usize("episodes", d.episodes)?,
        batch_episodes: s.usize("batch_episodes", d.batch_episodes)?,
        gamma: s.f64("gamma", d.gamma)?,
        learning_rate: s.f64("learning_rate", d.learning_rate)?,
        entropy_bonus: s.f64("entropy_bonus", d.entropy_bonus)?,
        eval_every: s.usize("eval_every", d.eval_every)?,
        baseline: s.parsed::<BaselineMode>("baseline", d.baseline)?,
        shared_params: s.bool("shared_params", d.shared_params)?,
        ..d.clone()
    };
    train.temperature.start = s.f64("tau_start", d.temperature.start)?;
    train.temperature.end = s.f64("tau_end", d.temperature.end)?;
    train.temperature.anneal_fraction = s.f64("anneal_fraction", d.temperature.anneal_fraction)?;

    let s = section(doc, "run");
    if let Some(v) = s.get("seeds") {
        let arr = v.as_array().ok_or_else(|| s.err("seeds", "expected an array of integers"))?;
        train.seeds = arr.iter().map(|x| s.as_usize("seeds", x).map(|n| n as u64)).collect::<std::result::Result<_, _>>()?;
    }
    let out = PathBuf::from(s.str("out")?.unwrap_or(DEFAULT_OUT));
    Ok(RunSpec { env, train, out })
}

impl RunSpec {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let doc: Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
        from_table(&doc)
    }

    /// Reads, parses and validates a spec file, then applies overrides.
    /// `out_env` is the value of `LATENT_PATROL_OUT`, which beats the file
    /// but loses to `--out`.
    pub fn load(path: &Path, overrides: &Overrides, out_env: Option<PathBuf>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config_err = |msg: String| CliError::Config { path: path.to_path_buf(), msg };
        let mut spec = Self::parse(&text).map_err(config_err)?;
        spec.apply(overrides, out_env);
        spec.validate().map_err(config_err)?;
        Ok(spec)
    }

    pub fn apply(&mut self, o: &Overrides, out_env: Option<PathBuf>) {
        let t = &mut self.train;
        if let Some(a) = o.algorithm {
            t.algorithm = a;
        }
        if let Some(n) = o.episodes {
            t.episodes = n;
        }
        if let Some(n) = o.batch_episodes {
            t.batch_episodes = n;
        }
        if let Some(n) = o.eval_every {
            t.eval_every = n;
        }
        if let Some(lr) = o.learning_rate {
            t.learning_rate = lr;
        }
        if let Some(s) = &o.seeds {
            t.seeds = s.clone();
        }
        if let Some(out) = o.out.clone().or(out_env) {
            self.out = out;
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        self.env.validate().map_err(|e| format!("[env] {e}"))?;
        self.train.validate().map_err(|e| format!("[train] {e}"))?;
        if self.train.seeds.is_empty() {
            return Err("run.seeds: at least one seed is required".into());
        }
        let mut sorted = self.train.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.train.seeds.len() {
            return Err("run.seeds: seeds must be distinct".into());
        }
        Ok(())
    }
}
