use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::MetricsRecord;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "episode,mean_team_reward,coverage_eff,detection_rate,policy_entropy,kl_gt,elbo,temperature";

pub fn format_csv(log: &[MetricsRecord]) -> String {
    let mut out = String::with_capacity(64 * (log.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in log {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.episode,
            r.mean_team_reward,
            r.coverage_efficiency,
            r.detection_rate,
            r.mean_policy_entropy,
            r.kl_ground_truth,
            r.elbo,
            r.temperature
        )
        .unwrap();
    }
    out
}

pub fn write_csv(log: &[MetricsRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, format_csv(log)).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        Some(h) => return Err(Error::format(path, format!("unexpected header `{h}`"))),
        None => return Err(Error::format(path, "empty file")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |msg: &str| Error::format(path, format!("line {}: {msg}", i + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(bad("expected 8 fields"));
            }
            let num = |j: usize| fields[j].parse::<f64>().map_err(|_| bad("bad number"));
            Ok(MetricsRecord {
                episode: fields[0].parse().map_err(|_| bad("bad episode index"))?,
                mean_team_reward: num(1)?,
                coverage_efficiency: num(2)?,
                detection_rate: num(3)?,
                mean_policy_entropy: num(4)?,
                kl_ground_truth: num(5)?,
                elbo: num(6)?,
                temperature: num(7)?,
            })
        })
        .collect()
}
