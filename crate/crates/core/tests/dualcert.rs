use kdual::dualcert::{
    check_feasibility, check_feasibility_fast, check_primal_dual_bound,
    check_primal_dual_bound_steps, dual_cost, labels_from_dual, run_greedydual_certified,
    served_bounds_hold, Certificate, DualSolution, Violation,
};
use kdual::offline::{opt_bruteforce, opt_flow};
use kdual::strategies::{run_greedydual, GreedyDual, OnlineStrategy, RelabelPolicy};
use kdual::trace::{parse_trace, RequestTrace};
use proptest::prelude::*;

const POLICIES: [RelabelPolicy; 2] = [RelabelPolicy::MaxLower, RelabelPolicy::MinLower];

fn trace_strategy(max_nodes: u32, max_len: usize) -> impl Strategy<Value = RequestTrace> {
    (1..=max_nodes).prop_flat_map(move |n| {
        (
            proptest::collection::vec(0..n, 0..max_len),
            proptest::collection::vec(1u64..=10, n as usize),
        )
            .prop_map(|(r, w)| RequestTrace::from_parts(&r, &w).unwrap())
    })
}

#[test]
fn weighted_example_certifies() {
    let t = parse_trace("a 3\nb 1\nc 2\na\nb\nd 5\nc\na\n").unwrap();
    for p in POLICIES {
        let run = run_greedydual_certified(2, &t, p);
        assert!(check_feasibility(&run.dual, &t).is_empty());
        for h in 1..=2 {
            assert!(check_primal_dual_bound(&run, 2, h));
            assert_eq!(check_primal_dual_bound_steps(&run, 2, h), Ok(()));
        }
        assert!(served_bounds_hold(&run));
    }
}

#[test]
fn shape_mismatch_reported() {
    let t = parse_trace("a\nb\n").unwrap();
    let d = DualSolution::zeros(3);
    assert_eq!(
        check_feasibility(&d, &t),
        vec![Violation::Shape { dual: 3, trace: 2 }]
    );
    assert!(DualSolution::from_vectors(vec![0, 0], vec![0, 0]).is_err());
}

#[test]
fn hand_built_infeasible_duals() {
    let t = parse_trace("a 2\nb 1\na\n").unwrap();
    // b_2 - a_1 <= d(r_1, r_2) = w(a) = 2
    let d = DualSolution::from_vectors(vec![0, 0, 0, 0], vec![0, 3, 0]).unwrap();
    let v = check_feasibility(&d, &t);
    assert!(v.contains(&Violation::Constraint {
        i: 1,
        j: 2,
        lhs: 3,
        distance: 2
    }));
    let neg = DualSolution::from_vectors(vec![0, -1, 0, 0], vec![0, 0, 0]).unwrap();
    assert!(matches!(
        check_feasibility(&neg, &t)[0],
        Violation::NegativeA { i: 1, value: -1 }
    ));
}

#[test]
fn dual_cost_formula() {
    // -h a_0 - sum_{1..N-1} a_i + sum b_j
    let d = DualSolution::from_vectors(vec![1, 2, 3, 4], vec![5, 6, 7]).unwrap();
    assert_eq!(dual_cost(&d, 2), -2 - 2 - 3 + 18);
    assert_eq!(dual_cost(&d, 1), -1 - 2 - 3 + 18);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn certified_run_matches_label_run(t in trace_strategy(7, 80), k in 1usize..5) {
        for p in POLICIES {
            let run = run_greedydual_certified(k, &t, p);
            prop_assert_eq!(&run.result, &run_greedydual(k, &t, p));
            let mut gd = GreedyDual::new(k, t.num_nodes(), p);
            for (i, &n) in t.requests().iter().enumerate() {
                gd.serve(i, n, &t);
            }
            let labels: Vec<_> = gd.labels().iter().map(|l| (l.node, l.low, l.high)).collect();
            prop_assert_eq!(labels_from_dual(&run, &t), labels);
        }
    }

    #[test]
    fn duals_are_feasible_and_bounds_hold(t in trace_strategy(6, 60), k in 1usize..5) {
        for p in POLICIES {
            let run = run_greedydual_certified(k, &t, p);
            prop_assert!(check_feasibility(&run.dual, &t).is_empty());
            prop_assert!(check_feasibility_fast(&run.dual, &t).is_empty());
            for h in 1..=k {
                prop_assert_eq!(check_primal_dual_bound_steps(&run, k, h), Ok(()));
                prop_assert!(check_primal_dual_bound(&run, k, h));
                // dual cost never exceeds the optimum it lower-bounds
                let opt = opt_flow(&t, h).unwrap().cost as i64;
                prop_assert!(dual_cost(&run.dual, h) <= opt);
                prop_assert!((k - h + 1) as u64 * run.result.total_cost <= k as u64 * opt as u64);
            }
        }
    }

    #[test]
    fn fast_check_agrees_with_exhaustive(
        t in trace_strategy(4, 12),
        a in proptest::collection::vec(-1i64..4, 13),
        b in proptest::collection::vec(-2i64..6, 12),
    ) {
        let n = t.len();
        let d = DualSolution::from_vectors(a[..=n].to_vec(), b[..n].to_vec()).unwrap();
        let slow = check_feasibility(&d, &t).is_empty();
        let fast = check_feasibility_fast(&d, &t).is_empty();
        // the fast check is sufficient, never more permissive
        prop_assert!(!fast || slow);
    }

    #[test]
    fn certificates_round_trip(t in trace_strategy(5, 40), k in 1usize..4) {
        let run = run_greedydual_certified(k, &t, RelabelPolicy::MaxLower);
        let cert = Certificate::from_run(&run, &t);
        let back = Certificate::parse(&cert.to_text()).unwrap();
        prop_assert_eq!(&back, &cert);
        for h in 1..=k {
            let v = back.verify(h).unwrap();
            prop_assert!(v.feasible && v.bound);
            prop_assert_eq!(v.dual_cost, dual_cost(&run.dual, h));
        }
    }
}

#[test]
fn small_instances_bound_against_bruteforce() {
    for seed in 0..60u64 {
        let t = kdual::trace::generate_random(4, 10, if seed % 2 == 0 { 1 } else { 5 }, seed);
        for k in 1..=3 {
            let run = run_greedydual_certified(k, &t, POLICIES[(seed % 2) as usize]);
            for h in 1..=k {
                let opt = opt_bruteforce(&t, h).unwrap();
                assert!(dual_cost(&run.dual, h) <= opt as i64);
                assert!((k - h + 1) as u64 * run.result.total_cost <= k as u64 * opt);
            }
        }
    }
}
