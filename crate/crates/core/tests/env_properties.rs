mod common;

use patrol_core::env::reset;
use patrol_core::EnvConfig;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn configs() -> impl Strategy<Value = EnvConfig> {
    (6usize..20, 6usize..20, 1usize..6, 1usize..4, 1usize..5, 1usize..4, 0.0f64..0.3, 1usize..40, any::<u64>()).prop_map(
        |(w, h, agents, poachers, hotspots, modes, occ, horizon, seed)| EnvConfig {
            grid_w: w,
            grid_h: h,
            n_agents: agents,
            n_poachers: poachers,
            n_hotspots: hotspots.max(modes),
            n_modes: modes,
            occlusion_fraction: occ,
            horizon,
            seed,
            ..Default::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_play_keeps_invariants(env in configs(), seed in any::<u64>()) {
        prop_assume!(env.validate().is_ok());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assume!(reset(&env, None, &mut rng.clone()).is_ok());
        let bad = common::audit_random_steps(&env, 200, &mut rng);
        prop_assert!(bad.is_empty(), "{:?}", &bad[..bad.len().min(5)]);
    }

    #[test]
    fn layout_depends_only_on_env_seed(env in configs(), a in any::<u64>(), b in any::<u64>()) {
        prop_assume!(env.validate().is_ok());
        let sa = reset(&env, None, &mut ChaCha8Rng::seed_from_u64(a));
        let sb = reset(&env, None, &mut ChaCha8Rng::seed_from_u64(b));
        if let (Ok(sa), Ok(sb)) = (sa, sb) {
            prop_assert_eq!(&sa.occlusion, &sb.occlusion);
            prop_assert_eq!(&sa.hotspots, &sb.hotspots);
        }
    }

    #[test]
    fn forced_mode_is_respected(env in configs(), seed in any::<u64>()) {
        prop_assume!(env.validate().is_ok());
        for mode in 0..env.n_modes {
            if let Ok(s) = reset(&env, Some(mode), &mut ChaCha8Rng::seed_from_u64(seed)) {
                prop_assert_eq!(s.scenario_mode, mode);
                prop_assert_eq!(s.t, 0);
                prop_assert_eq!(s.poachers.len(), env.n_poachers);
            }
        }
    }
}

#[test]
fn out_of_range_mode_rejected() {
    let env = EnvConfig::default();
    assert!(reset(&env, Some(env.n_modes), &mut ChaCha8Rng::seed_from_u64(0)).is_err());
}
