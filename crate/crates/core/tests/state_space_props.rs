use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statespace::kernel::psd_check;
use statespace::random;
use statespace::state_space::{
    convex_combine, face_contains, face_leq, is_extremal, max_component_weight, sup_ratio, support_projection,
    FaceHandle,
};

fn random_state(d: usize, rng: &mut ChaCha8Rng) -> statespace::StateOperator {
    let rank = rng.random_range(1..=d);
    random::state_with_rank(d, rank, 0.01, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn face_order_matches_containment(seed in any::<u64>(), d in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r2 = rng.random_range(1..=d);
        let basis = random::orthonormal_vectors(d, r2, &mut rng);
        let p2 = random::projection_onto(d, &basis);
        let p1 = if rng.random_bool(0.5) {
            let r1 = rng.random_range(1..=r2);
            random::projection_onto(d, &basis[..r1])
        } else {
            let r1 = rng.random_range(1..=d);
            random::projection(d, r1, &mut rng)
        };
        let (f1, f2) = (FaceHandle::from_projection(p1.clone()).unwrap(), FaceHandle::from_projection(p2).unwrap());
        let leq = face_leq(&f1, &f2).unwrap();
        let all_inside = (0..20).all(|_| face_contains(&f2, &random::state_in_projection(&p1, &mut rng)).unwrap());
        prop_assert_eq!(leq, all_inside);
    }

    #[test]
    fn component_weight_bounded_by_inverse_ratio(seed in any::<u64>(), d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t1 = random_state(d, &mut rng);
        let t2 = random_state(d, &mut rng);
        let w = max_component_weight(&t1, &t2).unwrap();
        prop_assert!((0.0..=1.0).contains(&w));
        let eigen_ratio = sup_ratio(&t1, &t2, None).unwrap();
        prop_assert!(w <= 1.0 / eigen_ratio + 1e-9);
        let custom = random::orthonormal_vectors(d, d, &mut rng);
        let custom_ratio = sup_ratio(&t1, &t2, Some(&custom)).unwrap();
        prop_assert!(w <= 1.0 / custom_ratio + 1e-9);
        let rest = t2.matrix().sub(&t1.matrix().scale_real(w)).unwrap();
        prop_assert!(psd_check(&rest, 1e-8).unwrap().is_psd);
    }

    #[test]
    fn extremal_states_have_no_other_components(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random::pure_state(d, &mut rng);
        prop_assert!(is_extremal(&t));
        for s in [random::pure_state(d, &mut rng), random::mixed_state(d, &mut rng)] {
            if s.distance(&t) > 1e-9 {
                prop_assert_eq!(max_component_weight(&s, &t).unwrap(), 0.0);
            }
        }
        prop_assert!((max_component_weight(&t, &t).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn convex_combination_face_contains_parts(seed in any::<u64>(), d in 1usize..5, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.01).collect();
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let head: f64 = weights[..k - 1].iter().sum();
        weights[k - 1] = 1.0 - head;
        let parts: Vec<_> = weights.iter().map(|&w| (w, random_state(d, &mut rng))).collect();
        let mixed = convex_combine(&parts).unwrap();
        let face = support_projection(&mixed);
        for (_, t) in &parts {
            prop_assert!(face_leq(&support_projection(t), &face).unwrap());
            prop_assert!(face_contains(&face, t).unwrap());
        }
    }
}
