mod common;

use common::oracles::{self, random_policy, random_state};
use lidarxai_core::policy::Checkpoint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn input_gradient_matches_central_differences() {
    oracles::gradient_matches_finite_differences(100).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn checkpoint_round_trip_is_exact(seed in any::<u64>()) {
        let policy = random_policy(seed);
        let text = serde_json::to_string(&Checkpoint::from_policy(&policy, None)).unwrap();
        let back: Checkpoint = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_policy().unwrap(), policy);
    }

    #[test]
    fn forward_is_pure(seed in any::<u64>()) {
        let policy = random_policy(seed);
        let state = random_state(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = policy.forward(&state).unwrap();
        prop_assert_eq!(a, policy.forward(&state).unwrap());
        prop_assert!((0.0..=1.0).contains(&a.action.v));
        prop_assert!((-1.0..=1.0).contains(&a.action.omega));
    }
}
