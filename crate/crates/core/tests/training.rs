use std::fs;
use std::path::Path;

use patrol_core::marl::{ablate, evaluate, latest_checkpoint, load_policies, train, Trainer};
use patrol_core::metrics::{format_csv, read_csv, write_csv};
use patrol_core::{Ablation, Algorithm, EnvConfig, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_env() -> EnvConfig {
    EnvConfig {
        grid_w: 10,
        grid_h: 10,
        n_agents: 2,
        n_poachers: 2,
        n_hotspots: 4,
        n_modes: 2,
        horizon: 25,
        ..Default::default()
    }
}

fn small_cfg(algorithm: Algorithm) -> TrainConfig {
    TrainConfig { episodes: 48, batch_episodes: 4, eval_every: 16, algorithm, ..Default::default() }
}

/// Compares against a committed fixture; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap();
    assert_eq!(actual, expected, "{name} changed; rerun with UPDATE_GOLDEN=1 if intended");
}

#[test]
fn small_em_run_matches_fixture() {
    let log = train(&small_cfg(Algorithm::EmPg), &small_env(), 3).unwrap();
    assert_eq!(log.iter().map(|r| r.episode).collect::<Vec<_>>(), vec![16, 32, 48]);
    check_golden("em_pg_small.csv", &format_csv(&log));
}

#[test]
fn csv_round_trip_within_print_precision() {
    let log = train(&small_cfg(Algorithm::CentralizedPg), &small_env(), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/metrics.csv");
    write_csv(&log, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), log.len());
    for (a, b) in log.iter().zip(&back) {
        assert_eq!(a.episode, b.episode);
        assert!((a.mean_team_reward - b.mean_team_reward).abs() <= 5e-7);
        assert!((a.elbo - b.elbo).abs() <= 5e-7);
    }
    assert_eq!(format_csv(&back), format_csv(&log));
}

#[test]
fn every_algorithm_trains() {
    for algo in [Algorithm::EmPg, Algorithm::IndependentPg, Algorithm::CentralizedPg] {
        let log = train(&small_cfg(algo), &small_env(), 0).unwrap();
        assert_eq!(log.len(), 3);
        assert!(log.iter().all(|r| r.mean_team_reward.is_finite() && r.elbo.is_finite()));
    }
}

#[test]
fn no_encoder_kl_is_log_k() {
    let log = ablate(&small_cfg(Algorithm::EmPg), &small_env(), 2, Ablation::NoEncoder).unwrap();
    assert!(log.iter().all(|r| (r.kl_ground_truth - 2f64.ln()).abs() < 1e-12));
}

#[test]
fn checkpoint_evaluates_reproducibly() {
    let env = small_env();
    let dir = tempfile::tempdir().unwrap();
    let mut t = Trainer::new(&env, &small_cfg(Algorithm::EmPg), 4, Some(Ablation::FrozenMStep)).unwrap();
    let initial = t.policies().clone();
    t.run(Some(dir.path())).unwrap();
    let latest = latest_checkpoint(dir.path()).unwrap().unwrap();
    let (meta, policies, encoder) = load_policies(&latest).unwrap();
    assert_eq!(meta.ablation, Some(Ablation::FrozenMStep));
    assert_eq!(policies, initial);
    assert!(encoder.is_some());
    let a = evaluate(&env, &policies, encoder.as_ref(), 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = evaluate(&env, &policies, encoder.as_ref(), 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(a, b);
}
