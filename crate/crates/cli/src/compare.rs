//! Side-by-side comparison of result directories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use patrol_core::metrics::read_csv;
use patrol_core::TrainLog;

use crate::error::{CliError, Result};
use crate::summary::{final_means, mean_std, METRICS};

/// Every seed's log from one result directory.
pub struct ResultSet {
    pub label: String,
    pub logs: Vec<TrainLog>,
}

fn schema_err(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_path_buf(), msg: msg.into() }
}

/// Loads `dir/metrics.csv` or every `dir/seed*/metrics.csv`.
pub fn load(dir: &Path) -> Result<ResultSet> {
    let mut files: Vec<PathBuf> = Vec::new();
    if dir.join("metrics.csv").is_file() {
        files.push(dir.join("metrics.csv"));
    } else {
        let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| CliError::io(dir, e))?;
            let name = entry.file_name();
            let csv = entry.path().join("metrics.csv");
            if name.to_string_lossy().starts_with("seed") && csv.is_file() {
                files.push(csv);
            }
        }
        files.sort();
    }
    if files.is_empty() {
        return Err(schema_err(dir, "no metrics.csv found"));
    }
    let logs: Vec<TrainLog> = files.iter().map(|f| read_csv(f)).collect::<patrol_core::Result<_>>()?;
    let episodes = |l: &TrainLog| l.iter().map(|r| r.episode).collect::<Vec<_>>();
    if logs[0].is_empty() {
        return Err(schema_err(&files[0], "no evaluation rows"));
    }
    for (f, l) in files.iter().zip(&logs) {
        if episodes(l) != episodes(&logs[0]) {
            return Err(schema_err(f, "evaluation points differ from the other seeds"));
        }
    }
    let label = dir
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| dir.display().to_string());
    Ok(ResultSet { label, logs })
}

/// Makes labels unique by suffixing repeats with their position.
fn unique_labels(sets: &[ResultSet]) -> Vec<String> {
    sets.iter()
        .enumerate()
        .map(|(i, s)| {
            if sets.iter().filter(|o| o.label == s.label).count() > 1 {
                format!("{}#{}", s.label, i + 1)
            } else {
                s.label.clone()
            }
        })
        .collect()
}

/// Per-episode mean and std across seeds of every metric, one column pair
/// per (result set, metric).
pub fn merged_csv(sets: &[ResultSet]) -> Result<String> {
    let points: Vec<usize> = sets[0].logs[0].iter().map(|r| r.episode).collect();
    for s in &sets[1..] {
        if s.logs[0].iter().map(|r| r.episode).ne(points.iter().copied()) {
            return Err(CliError::Usage(format!(
                "`{}` was evaluated at different episodes than `{}`",
                s.label, sets[0].label
            )));
        }
    }
    let labels = unique_labels(sets);
    let mut out = String::from("episode");
    for l in &labels {
        for (m, _) in METRICS {
            write!(out, ",{l}.{m}.mean,{l}.{m}.std").unwrap();
        }
    }
    out.push('\n');
    for (row, ep) in points.iter().enumerate() {
        write!(out, "{ep}").unwrap();
        for s in sets {
            for (_, f) in METRICS {
                let xs: Vec<f64> = s.logs.iter().map(|l| f(&l[row])).collect();
                let (mean, std) = mean_std(&xs);
                write!(out, ",{mean:.6},{std:.6}").unwrap();
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// One line per metric naming the set with the highest final-window mean.
pub fn verdicts(sets: &[ResultSet]) -> Vec<String> {
    let labels = unique_labels(sets);
    let means: Vec<Vec<f64>> = sets
        .iter()
        .map(|s| {
            let per_seed: Vec<Vec<f64>> = s.logs.iter().map(|l| final_means(l)).collect();
            (0..METRICS.len())
                .map(|m| mean_std(&per_seed.iter().map(|v| v[m]).collect::<Vec<_>>()).0)
                .collect()
        })
        .collect();
    METRICS
        .iter()
        .enumerate()
        .map(|(m, (name, _))| {
            let vals: Vec<f64> = means.iter().map(|v| v[m]).collect();
            let best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let winners: Vec<&str> =
                labels.iter().zip(&vals).filter(|(_, &v)| v == best).map(|(l, _)| l.as_str()).collect();
            let head = if winners.len() == sets.len() {
                "tie".to_string()
            } else {
                format!("highest {}", winners.join(", "))
            };
            let detail: Vec<String> = labels.iter().zip(&vals).map(|(l, v)| format!("{l}={v:.4}")).collect();
            format!("{name}: {head} ({})", detail.join(" "))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use patrol_core::MetricsRecord;

    use super::*;

    fn log(rewards: &[f64]) -> TrainLog {
        rewards
            .iter()
            .enumerate()
            .map(|(i, &r)| MetricsRecord {
                episode: (i + 1) * 10,
                mean_team_reward: r,
                coverage_efficiency: 50.0,
                detection_rate: 10.0,
                mean_policy_entropy: 1.0,
                kl_ground_truth: 0.5,
                elbo: -3.0,
                temperature: 1.0,
            })
            .collect()
    }

    #[test]
    fn verdict_picks_highest_final_window() {
        let a = ResultSet { label: "a".into(), logs: vec![log(&[0.0, 1.0]), log(&[0.0, 3.0])] };
        let b = ResultSet { label: "b".into(), logs: vec![log(&[9.0, 1.5])] };
        let v = verdicts(&[a, b]);
        assert_eq!(v[0], "mean_team_reward: highest a (a=2.0000 b=1.5000)");
        assert!(v[1].starts_with("coverage_eff: tie"));
    }

    #[test]
    fn merged_columns_and_spread() {
        let a = ResultSet { label: "x".into(), logs: vec![log(&[1.0, 2.0]), log(&[3.0, 2.0])] };
        let b = ResultSet { label: "x".into(), logs: vec![log(&[1.0, 2.0])] };
        let csv = merged_csv(&[a, b]).unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("episode,x#1.mean_team_reward.mean,x#1.mean_team_reward.std"));
        assert_eq!(header.split(',').count(), 1 + 2 * 2 * METRICS.len());
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&row[..3], &["10", "2.000000", "1.414214"]);
    }

    #[test]
    fn mismatched_evaluation_points_rejected() {
        let a = ResultSet { label: "a".into(), logs: vec![log(&[1.0, 2.0])] };
        let b = ResultSet { label: "b".into(), logs: vec![log(&[1.0])] };
        assert!(merged_csv(&[a, b]).is_err());
    }
}
