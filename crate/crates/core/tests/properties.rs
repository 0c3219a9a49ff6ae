use fbl_jscc::channel::{capacity, mutual_information, CapacityOptions};
use fbl_jscc::jscc::combine_error_probs;
use fbl_jscc::prob::{entropy, q_function, q_inverse, Channel, Distribution};
use fbl_jscc::separation::{separation_equivalent_eps, separation_vsep, DEFAULT_GRID_TOL};
use fbl_jscc::sim::SimResult;
use proptest::prelude::*;

fn dist(len: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.01f64..1.0, len).prop_map(|w| Distribution::from_weights(w).unwrap())
}

fn channel(inputs: usize, outputs: usize) -> impl Strategy<Value = Channel> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, outputs), inputs).prop_map(|rows| {
        Channel::new(
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|v| v / s).collect()
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_is_concave(p in dist(4), q in dist(4), a in 0.0f64..=1.0) {
        let mix = p.mix(&q, a).unwrap();
        prop_assert!(entropy(&mix) >= a * entropy(&p) + (1.0 - a) * entropy(&q) - 1e-12);
    }

    #[test]
    fn entropy_bounded_by_log_alphabet(p in dist(5)) {
        let h = entropy(&p);
        prop_assert!(h >= 0.0 && h <= 5f64.ln() + 1e-12);
    }

    #[test]
    fn q_inverse_round_trips(e in 1e-12f64..0.999_999) {
        let x = q_inverse(e).unwrap();
        prop_assert!((q_function(x) - e).abs() <= 1e-12 * e.max(1e-3));
    }

    #[test]
    fn mutual_information_concave_in_input(p in dist(3), q in dist(3), w in channel(3, 3), a in 0.0f64..=1.0) {
        let mix = p.mix(&q, a).unwrap();
        let lhs = mutual_information(&mix, &w).unwrap();
        let rhs = a * mutual_information(&p, &w).unwrap() + (1.0 - a) * mutual_information(&q, &w).unwrap();
        prop_assert!(lhs >= rhs - 1e-12);
    }

    #[test]
    fn capacity_invariant_under_output_permutation(w in channel(2, 3), perm in Just(vec![2usize, 0, 1])) {
        let opts = CapacityOptions::default();
        let a = capacity(&w, opts).unwrap().capacity;
        let b = capacity(&w.permute_outputs(&perm).unwrap(), opts).unwrap().capacity;
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn combine_is_commutative_associative_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, bump in 0.0f64..=1.0) {
        let ab = combine_error_probs(a, b).unwrap();
        prop_assert!((ab - combine_error_probs(b, a).unwrap()).abs() <= 1e-15);
        let left = combine_error_probs(ab, c).unwrap();
        let right = combine_error_probs(a, combine_error_probs(b, c).unwrap()).unwrap();
        prop_assert!((left - right).abs() <= 1e-14);
        let a2 = a + (1.0 - a) * bump;
        prop_assert!(combine_error_probs(a2, b).unwrap() >= ab - 1e-15);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn separation_never_beats_joint(v_s in 0.01f64..5.0, rho_v_c in 0.01f64..5.0, eps in 1e-4f64..0.49) {
        let sep = separation_vsep(eps, v_s, rho_v_c).unwrap();
        prop_assert!(sep.v_sep >= (v_s + rho_v_c) * (1.0 - 1e-9));
    }

    #[test]
    fn equivalent_eps_not_above_eps(eps in 1e-4f64..0.5, log_lambda in -7.0f64..7.0) {
        let r = separation_equivalent_eps(eps, log_lambda.exp(), DEFAULT_GRID_TOL).unwrap();
        prop_assert!(r.eps_tilde <= eps + 1e-12);
        prop_assert!(r.eps_tilde > 0.0);
    }

    #[test]
    fn sim_result_std_error_formula(count in 0u64..=1000, extra in 0u64..1000) {
        let trials = count + extra + 1;
        let r = SimResult::from_count(count, trials);
        let p = count as f64 / trials as f64;
        prop_assert!((0.0..=1.0).contains(&r.estimate));
        prop_assert!((r.std_error - (p * (1.0 - p) / trials as f64).sqrt()).abs() <= 1e-15);
    }
}
