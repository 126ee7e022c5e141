//! Property tests against independent recomputations.

mod common;

use proptest::prelude::*;

use rumor_core::classifier::stratified_folds;
use rumor_core::dsts::{build_dsts_vector, DstsVector};
use rumor_core::epi::{
    simulate_seiz, simulate_sis, simulate_spikem, SeizParams, SisParams, SpikeMParams,
};
use rumor_core::features::{LookupTables, SurfaceFeatures};

use common::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn surface_features_match_oracle(bucket in bucket_strategy()) {
        let tables = LookupTables::bundled();
        let got = SurfaceFeatures::extract(&bucket, &tables).to_vec();
        let want = oracle_surface(&bucket, &tables);
        prop_assert_eq!(got.len(), want.len());
        prop_assert_eq!(first_mismatch(&got, &want, 1e-12), None);
    }

    #[test]
    fn dsts_matches_oracle(seed in any::<u64>(), n in 1usize..20, d in 1usize..12, normalize in any::<bool>()) {
        let frames = random_frames(&mut rng(seed), n, d, true);
        let v = build_dsts_vector("e", &frames, 1.0, normalize).unwrap();
        prop_assert_eq!(v.values.len(), DstsVector::expected_len(n, d));
        prop_assert_eq!(v.values, oracle_dsts(&frames, 1.0, normalize));
    }

    #[test]
    fn sis_stays_within_population(beta in 0.0f64..2.0, alpha in 0.0f64..1.0, steps in 1usize..60) {
        let p = SisParams { beta, alpha, population: 500.0 };
        let curve = simulate_sis(&p, steps).unwrap();
        prop_assert_eq!(curve.len(), steps);
        prop_assert!(curve.iter().all(|&x| x.is_finite() && x >= 0.0));
        prop_assert!(curve.iter().sum::<f64>() <= 500.0 + 1e-6);
    }

    #[test]
    fn seiz_curve_is_finite_and_nonnegative(
        beta in 0.0f64..1.5, b in 0.0f64..1.5, l in 0.0f64..=1.0, p in 0.0f64..=1.0,
        epsilon in 0.0f64..1.0, rho in 0.0f64..1.5, steps in 1usize..60,
    ) {
        let params = SeizParams { beta, b, l, p, epsilon, rho, ..seiz_base() };
        let curve = simulate_seiz(&params, steps).unwrap();
        prop_assert_eq!(curve.len(), steps);
        prop_assert!(curve.iter().all(|&x| x.is_finite() && x >= -1e-9));
    }

    #[test]
    fn spikem_never_exceeds_population(
        beta_strength in 0.0f64..1.0, shock in 0.0f64..50.0, epsilon in 0.0f64..1.0,
        p_amp in 0.0f64..=1.0, q_amp in 0.0f64..=1.0, steps in 1usize..60,
    ) {
        let params = SpikeMParams {
            beta_strength: beta_strength / 800.0,
            start: 0,
            shock,
            epsilon,
            p_period: 24.0,
            p_amp,
            p_shift: 0.0,
            q_period: 12.0,
            q_amp,
            q_shift: 0.0,
            population: 800.0,
        };
        let curve = simulate_spikem(&params, steps).unwrap();
        prop_assert_eq!(curve.len(), steps);
        prop_assert!(curve.iter().all(|&x| x.is_finite() && x >= 0.0));
        prop_assert!(curve.iter().sum::<f64>() <= 800.0 + 1e-6);
    }

    #[test]
    fn folds_are_balanced(labels in prop::collection::vec(0u8..2, 2..200), k in 2usize..11, seed in any::<u64>()) {
        let folds = stratified_folds(&labels, k, seed);
        let mut sizes = vec![0usize; k];
        for &f in &folds {
            prop_assert!(f < k);
            sizes[f] += 1;
        }
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }
}

fn seiz_base() -> SeizParams {
    SeizParams {
        beta: 0.5,
        b: 0.5,
        l: 0.5,
        p: 0.5,
        epsilon: 0.2,
        rho: 0.5,
        population: 1000.0,
        skeptic_seed: rumor_core::epi::DEFAULT_SKEPTIC_SEED,
    }
}
