mod common;

use common::*;
use proptest::prelude::*;

fn each_family(seed: u64, check: impl Fn(&mut rand_chacha::ChaCha8Rng, Family) -> Check) -> Result<(), TestCaseError> {
    for (k, family) in FAMILIES.into_iter().enumerate() {
        let mut r = rng(seed.wrapping_add(k as u64));
        check(&mut r, family).map_err(TestCaseError::fail)?;
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn search_matches_exhaustive_enumeration(seed in any::<u64>()) {
        each_family(seed, |r, f| check_oracle(r, f, 10))?;
    }

    #[test]
    fn explanations_flip_and_are_minimal(seed in any::<u64>()) {
        each_family(seed, check_rescoring_and_minimality)?;
    }

    #[test]
    fn restricting_more_never_lowers_sev(seed in any::<u64>()) {
        each_family(seed, check_restriction_monotonicity)?;
    }

    #[test]
    fn deeper_search_never_raises_sev(seed in any::<u64>()) {
        each_family(seed, check_depth_monotonicity)?;
    }

    #[test]
    fn flip_count_bounds_sev_minus(seed in any::<u64>()) {
        each_family(seed, check_flip_count)?;
    }

    #[test]
    fn cube_corners_and_sev_at_least_one(seed in any::<u64>()) {
        each_family(seed, check_endpoints)?;
    }

    #[test]
    fn loss_ranges(seed in any::<u64>()) {
        each_family(seed, check_loss_bounds)?;
    }

    #[test]
    fn round_trips(seed in any::<u64>()) {
        each_family(seed, check_serialization)?;
    }

    #[test]
    fn scores_stay_in_unit_interval(seed in any::<u64>()) {
        each_family(seed, |r, f| check_score_bounds(r, f, 200))?;
    }

    #[test]
    fn gbdt_logit_is_linear_in_weights(seed in any::<u64>()) {
        check_gbdt_doubling(&mut rng(seed)).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn linear_models_are_scale_invariant(seed in any::<u64>()) {
        check_linear_scaling(&mut rng(seed)).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn data_round_trip_split_and_reference(seed in any::<u64>()) {
        check_data_round_trip(&mut rng(seed)).map_err(TestCaseError::fail)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn warmup_is_plain_bce(seed in any::<u64>()) {
        for f in [Family::Linear, Family::Mlp] {
            check_warmup_equivalence(&mut rng(seed), f).map_err(TestCaseError::fail)?;
        }
    }

    #[test]
    fn analytic_gradients_match_differences(seed in any::<u64>()) {
        let mut r = rng(seed);
        for f in FAMILIES {
            for l in LOSSES {
                check_gradient(&mut r, f, l).map_err(TestCaseError::fail)?;
            }
        }
    }
}
