use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use patrol_bench::{desk_env, desk_episode, desk_policies};
use patrol_core::env::{reset, Action};
use patrol_core::latent::exact_posterior;
use patrol_core::marl::{m_step_update, rollout, LatentChoice};
use patrol_core::nn::{AdamState, MlpDims, MlpParams};
use patrol_core::TrainConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn env_step(c: &mut Criterion) {
    let env = desk_env();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("env_step", |b| {
        let mut state = reset(&env, None, &mut rng).unwrap();
        b.iter(|| {
            if state.is_done() {
                state = reset(&env, None, &mut rng).unwrap();
            }
            let actions: Vec<Action> = (0..env.n_agents).map(|_| Action::ALL[rng.gen_range(0..6)]).collect();
            black_box(state.step(&actions, &mut rng));
        })
    });
    let state = reset(&env, Some(0), &mut rng).unwrap();
    c.bench_function("observe", |b| b.iter(|| black_box(state.observe(black_box(2)))));
}

fn mlp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = MlpParams::init(MlpDims::new(96, 64, 6), &mut rng);
    let x: Vec<f64> = (0..96).map(|_| rng.gen_range(-1.0..1.0)).collect();
    c.bench_function("mlp_forward", |b| b.iter(|| black_box(net.forward(black_box(&x)))));
    c.bench_function("mlp_logprob_grad", |b| b.iter(|| black_box(net.logprob_grad(black_box(&x), 3, 1.0))));
}

fn training_phases(c: &mut Criterion) {
    let env = desk_env();
    let mut policies = desk_policies(&env);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    c.bench_function("rollout_desk", |b| {
        b.iter(|| black_box(rollout(&env, &policies, LatentChoice::Fixed(1), 1, false, &mut rng).unwrap()))
    });
    let batch: Vec<_> = (0..3).map(|s| desk_episode(&env, &policies, s)).collect();
    c.bench_function("exact_posterior_desk", |b| {
        b.iter(|| black_box(exact_posterior(&batch[0], &policies, 1.0).unwrap()))
    });
    let posts: Vec<_> = batch.iter().map(|ep| exact_posterior(ep, &policies, 1.0).unwrap()).collect();
    let cfg = TrainConfig::default();
    let mut adams: Vec<_> = policies.nets().iter().map(|n| AdamState::new(n.dims().len())).collect();
    c.bench_function("m_step_batch3", |b| {
        b.iter(|| black_box(m_step_update(&batch, &posts, &mut policies, &mut adams, &cfg).unwrap()))
    });
}

criterion_group!(benches, env_step, mlp, training_phases);
criterion_main!(benches);
