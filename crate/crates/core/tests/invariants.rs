mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use stump_core::csg::{simplify_stump, tree_to_stump, DEFAULT_TERM_CAP};
use stump_core::fit::{bp_objective, solve_anneal_from, AnnealConfig, BpInstance, Matrices, RowLayout};
use stump_core::geometry::Sharpness;
use stump_core::io::{stump_from_json, stump_to_json, StumpDoc};
use stump_core::sampling::{chamfer_brute_force, chamfer_l2};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_preserves_occupancy(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, 6, 4);
        let stump = tree_to_stump(&tree, DEFAULT_TERM_CAP).unwrap();
        for x in uniform_points(&mut rng, 500, 1.2) {
            prop_assert_eq!(tree.eval_hard(&x), stump.eval_hard(&x));
        }
    }

    #[test]
    fn simplification_agrees_on_its_points(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stump = tree_to_stump(&random_tree(&mut rng, 6, 4), DEFAULT_TERM_CAP).unwrap();
        let pts = uniform_points(&mut rng, 500, 1.2);
        let small = simplify_stump(&stump, &pts);
        prop_assert!(small.c() <= stump.c());
        for x in &pts {
            prop_assert_eq!(small.eval_hard(x), stump.eval_hard(x));
        }
    }

    #[test]
    fn stump_unfolds_to_equal_tree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stump = random_stump(&mut rng, 5, 4);
        let tree = stump.to_tree();
        for x in uniform_points(&mut rng, 300, 1.2) {
            prop_assert_eq!(tree.eval_hard(&x), stump.eval_hard(&x));
        }
    }

    #[test]
    fn soft_occupancy_is_a_probability(seed in any::<u64>(), eta in 1.0f64..200.0, psi in 1.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = random_soft_stump(&mut rng, 4, 4);
        s.sharpness = Sharpness::new(eta, psi).unwrap();
        for x in uniform_points(&mut rng, 200, 1.5) {
            let t = s.eval(&x);
            prop_assert!((0.0..=1.0).contains(&t), "{}", t);
        }
    }

    #[test]
    fn lift_then_binarize_is_identity(seed in any::<u64>(), lo in 0.0f64..0.49, hi in 0.51f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_stump(&mut rng, 5, 5);
        prop_assert_eq!(s.lift(lo, hi, Sharpness::default()).binarize(0.5), s);
    }

    #[test]
    fn json_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_stump(&mut rng, 6, 6);
        prop_assert_eq!(stump_from_json(&stump_to_json(&s)).unwrap(), StumpDoc::Hard(s));
    }

    #[test]
    fn warm_started_anneal_never_regresses(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_tree(&mut rng, 4, 3);
        let pts = uniform_points(&mut rng, 150, 1.2);
        let target: Vec<bool> = pts.iter().map(|x| tree.eval_hard(x)).collect();
        let inst = BpInstance::from_primitives(&tree.primitives, &pts, &target, 2, true).unwrap();
        let start = Matrices::empty(inst.k(), 2, RowLayout::Paired);
        let before = bp_objective(&inst, &start).unwrap();
        let cfg = AnnealConfig { restarts: 1, max_sweeps: 50, seed, ..Default::default() };
        let (m, rep) = solve_anneal_from(&inst, &cfg, start).unwrap();
        prop_assert!(rep.objective <= before);
        prop_assert_eq!(bp_objective(&inst, &m).unwrap(), rep.objective);
        prop_assert!(rep.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn chamfer_matches_brute_force(seed in any::<u64>(), n in 1usize..60, m in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = uniform_points(&mut rng, n, 1.0);
        let b = uniform_points(&mut rng, m, 1.0);
        let fast = chamfer_l2(&a, &b).unwrap();
        prop_assert!((fast - chamfer_brute_force(&a, &b)).abs() <= 1e-12);
        prop_assert!((fast - chamfer_l2(&b, &a).unwrap()).abs() <= 1e-12);
    }
}
