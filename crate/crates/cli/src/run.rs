use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use patrol_core::marl::{evaluate, latest_checkpoint, load_policies, EvalSummary, RunMeta};
use patrol_core::metrics::write_csv;
use patrol_core::{Ablation, TrainLog, Trainer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};
use crate::spec::RunSpec;
use crate::summary::{final_means, mean_std, METRICS};

/// `out/<label>/seed<k>`, where the label is the ablation name if any,
/// otherwise the algorithm name.
pub fn seed_dir(spec: &RunSpec, ablation: Option<Ablation>, seed: u64) -> PathBuf {
    let label = ablation.map_or(spec.train.algorithm.name(), Ablation::name);
    spec.out.join(label).join(format!("seed{seed}"))
}

fn train_seed(spec: &RunSpec, ablation: Option<Ablation>, seed: u64, resume: bool) -> Result<TrainLog> {
    let dir = seed_dir(spec, ablation, seed);
    let ckpt = dir.join("ckpt");
    let mut trainer = if resume && latest_checkpoint(&ckpt)?.is_some() {
        Trainer::resume(&ckpt, &spec.env, &spec.train, seed, ablation)?
    } else {
        if ckpt.exists() {
            fs::remove_dir_all(&ckpt).map_err(|e| CliError::io(&ckpt, e))?;
        }
        Trainer::new(&spec.env, &spec.train, seed, ablation)?
    };
    trainer.run(Some(&ckpt))?;
    let log = trainer.into_log();
    write_csv(&log, &dir.join("metrics.csv"))?;
    Ok(log)
}

/// Trains every seed of the spec, up to `jobs` at a time, and returns the
/// logs in seed order.
pub fn train_all(spec: &RunSpec, ablation: Option<Ablation>, resume: bool, jobs: usize) -> Result<Vec<TrainLog>> {
    let seeds = &spec.train.seeds;
    let results: Mutex<Vec<Option<Result<TrainLog>>>> = Mutex::new((0..seeds.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    thread::scope(|s| {
        for _ in 0..jobs.clamp(1, seeds.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&seed) = seeds.get(i) else { break };
                let r = train_seed(spec, ablation, seed, resume);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(Option::unwrap).collect()
}

/// Final-window mean and spread across seeds for every metric.
pub fn summary(logs: &[TrainLog]) -> String {
    let per_seed: Vec<Vec<f64>> = logs.iter().map(|l| final_means(l)).collect();
    let mut out = format!("final window over {} seed(s), mean ± std:\n", logs.len());
    for (m, (name, _)) in METRICS.iter().enumerate() {
        let xs: Vec<f64> = per_seed.iter().map(|v| v[m]).collect();
        let (mean, std) = mean_std(&xs);
        out.push_str(&format!("  {name:<17} {mean:>12.4} ± {std:.4}\n"));
    }
    out
}

/// Accepts a checkpoint directory, a checkpoint root, or a seed directory
/// holding `ckpt/`, and resolves it to one checkpoint.
pub fn resolve_checkpoint(path: &Path) -> Result<PathBuf> {
    if path.join("run.txt").is_file() {
        return Ok(path.to_path_buf());
    }
    let root = if path.join("ckpt").is_dir() { path.join("ckpt") } else { path.to_path_buf() };
    if !root.is_dir() {
        return Err(CliError::Usage(format!("{}: no such checkpoint directory", path.display())));
    }
    latest_checkpoint(&root)?
        .ok_or_else(|| CliError::Usage(format!("{}: no complete checkpoint found", path.display())))
}

pub fn eval_checkpoint(path: &Path, episodes: usize, seed: u64) -> Result<(RunMeta, PathBuf, EvalSummary)> {
    let dir = resolve_checkpoint(path)?;
    let (meta, policies, encoder) = load_policies(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = evaluate(&meta.env, &policies, encoder.as_ref(), episodes, &mut rng)?;
    Ok((meta, dir, s))
}

pub fn format_eval(meta: &RunMeta, dir: &Path, s: &EvalSummary) -> String {
    let run = match meta.ablation {
        Some(a) => format!("{} ({a})", meta.algorithm),
        None => meta.algorithm.to_string(),
    };
    format!(
        "checkpoint {}\nrun {run}, seed {}\nepisodes {}\nmean_team_reward {}\ncoverage_eff {}\ndetection_rate {}\npolicy_entropy {}\nkl_gt {}\n",
        dir.display(),
        meta.seed,
        s.episodes,
        s.mean_team_reward,
        s.coverage_efficiency,
        s.detection_rate,
        s.mean_policy_entropy,
        s.kl_ground_truth,
    )
}
