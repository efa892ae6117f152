//! Property tests for the core invariants.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qacokit::pheromone::{
    decode_bitstring, encode_tour, pool_selection_probs, repair, update_pheromone,
    PheromoneVector, QacoConfig, SolutionPool, SubproblemEncoding,
};
use qacokit::qsim::StateVector;
use qacokit::tspio::{is_permutation, random_instance};

fn permutation_strategy(k: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..k).collect::<Vec<usize>>()).prop_shuffle()
}

proptest! {
    #[test]
    fn norm_conserved_under_random_circuits(
        angles in prop::collection::vec(-3.2f64..3.2, 1..20),
        seed in 0u64..1000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = StateVector::new(4).unwrap();
        for angle in angles {
            let q = (seed as usize + angle.abs() as usize) % 4;
            state.apply_ry(q, angle).unwrap();
            if rand::Rng::gen_bool(&mut rng, 0.3) {
                let t = (q + 1) % 4;
                state.apply_cnot(&[q], t).unwrap();
            }
        }
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ry_roundtrip_restores(angle in -3.2f64..3.2, qubit in 0usize..3) {
        let mut state = StateVector::new(3).unwrap();
        state.apply_ry(0, 0.4).unwrap();
        state.apply_ry(2, -1.1).unwrap();
        let before = state.amplitudes().to_vec();
        state.apply_ry(qubit, angle).unwrap();
        state.apply_ry(qubit, -angle).unwrap();
        for (a, b) in before.iter().zip(state.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn encode_decode_inverse(k in 2usize..7, seed in 0u64..500) {
        let enc = SubproblemEncoding::new(k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tour: Vec<usize> = (0..k).collect();
        rand::seq::SliceRandom::shuffle(&mut tour[..], &mut rng);
        let bits = encode_tour(&tour, &enc).unwrap();
        prop_assert_eq!(decode_bitstring(&bits, &enc).unwrap(), Some(tour));
    }

    #[test]
    fn pool_probs_sum_and_order(distances in prop::collection::vec(1usize..200, 1..12)) {
        let probs = pool_selection_probs(&distances).unwrap();
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for i in 0..distances.len() {
            for j in 0..distances.len() {
                if distances[i] < distances[j] {
                    prop_assert!(probs[i] > probs[j]);
                }
            }
        }
    }

    #[test]
    fn repair_always_feasible(
        bits in prop::collection::vec(0u8..2, 8),
        iteration in 1usize..60,
        seed in 0u64..500,
    ) {
        let enc = SubproblemEncoding::new(4).unwrap();
        let cfg = QacoConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool = SolutionPool::new(4);
        let t = vec![1usize, 0, 3, 2];
        let b = encode_tour(&t, &enc).unwrap();
        pool.insert(t, b, 5.0);
        let tour = repair(&bits, iteration, &pool, &cfg, &enc, &mut rng).unwrap();
        prop_assert!(is_permutation(&tour, 4));
    }

    #[test]
    fn pheromone_angles_stay_in_band(
        updates in prop::collection::vec((0u8..2, 0u8..2, proptest::bool::ANY), 1..200),
    ) {
        let band = (0.05 * std::f64::consts::PI, 0.95 * std::f64::consts::PI);
        let mut pher = PheromoneVector::uniform(1);
        for (x, b, better) in updates {
            update_pheromone(&mut pher, &[x], &[b], better, band).unwrap();
            prop_assert!(pher.angles[0] >= band.0 && pher.angles[0] <= band.1);
        }
    }

    #[test]
    fn tour_length_symmetry(n in 4usize..10, seed in 0u64..200, perm in 0u64..100) {
        let inst = random_instance(n, seed, (100.0, 100.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(perm);
        let mut tour: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(&mut tour[..], &mut rng);
        let base = inst.tour_length(&tour);
        let reversed: Vec<usize> = tour.iter().rev().copied().collect();
        let rotated: Vec<usize> = tour.iter().cycle().skip(n / 2).take(n).copied().collect();
        prop_assert!((inst.tour_length(&reversed) - base).abs() < 1e-9);
        prop_assert!((inst.tour_length(&rotated) - base).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn decompose_partitions_cities(n in 5usize..40, seed in 0u64..100) {
        let inst = random_instance(n, seed, (500.0, 500.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = qacokit::cluster::decompose(&inst, 4, &mut rng).unwrap();
        let mut cities = tree.cities();
        cities.sort_unstable();
        prop_assert_eq!(cities, (0..n).collect::<Vec<_>>());
        prop_assert!(tree.leaf_sizes().iter().all(|&s| s <= 4));
    }

    #[test]
    fn recombine_is_permutation(tour_perm in permutation_strategy(12), seed in 0u64..50) {
        let inst = random_instance(12, seed, (100.0, 100.0)).unwrap();
        // split the permutation into three child "tours" of four cities
        let children: Vec<Vec<usize>> = tour_perm.chunks(4).map(|c| c.to_vec()).collect();
        let tour = qacokit::cluster::recombine(&inst, &children, &[0, 1, 2]).unwrap();
        prop_assert!(is_permutation(&tour, 12));
    }
}
