use patrol_core::MetricsRecord;

type Metric = (&'static str, fn(&MetricsRecord) -> f64);

/// CSV column name and accessor for every reported metric.
pub const METRICS: [Metric; 7] = [
    ("mean_team_reward", |r| r.mean_team_reward),
    ("coverage_eff", |r| r.coverage_efficiency),
    ("detection_rate", |r| r.detection_rate),
    ("policy_entropy", |r| r.mean_policy_entropy),
    ("kl_gt", |r| r.kl_ground_truth),
    ("elbo", |r| r.elbo),
    ("temperature", |r| r.temperature),
];

/// The last tenth of the evaluation points, at least one.
pub fn final_window(log: &[MetricsRecord]) -> &[MetricsRecord] {
    let n = (log.len() / 10).max(1).min(log.len());
    &log[log.len() - n..]
}

/// Per-metric mean over the final window.
pub fn final_means(log: &[MetricsRecord]) -> Vec<f64> {
    let w = final_window(log);
    METRICS
        .iter()
        .map(|(_, f)| w.iter().map(f).sum::<f64>() / w.len() as f64)
        .collect()
}

/// Mean and sample standard deviation; the deviation of one value is 0.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
