use kdual::offline::opt_flow;
use kdual::phases::{
    mark_new_requests_bound_holds, mark_upper_bound, mark_upper_bound_f64,
    new_requests_bound_holds, opt_phase_lower_bound, partition, phase_cost_bound_holds,
    verify_phase_shrink,
};
use kdual::strategies::{run, StrategySpec};
use kdual::trace::{generate_cyclic, generate_random, parse_trace, RequestTrace};
use num_rational::Rational64;
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn paging_strategy(max_nodes: u32, max_len: usize) -> impl Strategy<Value = RequestTrace> {
    (1..=max_nodes).prop_flat_map(move |n| {
        proptest::collection::vec(0..n, 0..max_len).prop_map(|r| RequestTrace::paging(&r))
    })
}

#[test]
fn spec_style_examples() {
    let t = parse_trace("a\nb\nc\na\nb\nd\n").unwrap();
    let p = partition(&t, 2);
    assert_eq!(p.numphases(), 2);
    assert_eq!(p.new_counts, vec![1, 2]);
    assert_eq!(p.avenew().value, Rational64::new(3, 2));
    let q = partition(&parse_trace("a\nb\na\n").unwrap(), 1);
    assert_eq!(q.new_counts, vec![1, 1]);
}

#[test]
fn cyclic_phases() {
    // k+1 nodes in a cycle: every phase has k requests, one of them new
    let t = generate_cyclic(5, 40);
    let p = partition(&t, 4);
    assert_eq!(p.numphases(), 9);
    assert!(p.new_counts.iter().all(|&m| m == 1));
    assert_eq!(verify_phase_shrink(&t, 4), Some(true));
}

#[test]
fn mark_bound_dominates_mark_mean() {
    let t = generate_random(12, 600, 1, 4);
    for k in [2, 4, 8] {
        let p = partition(&t, k);
        let mean = (0..300)
            .map(|s| run(StrategySpec::Mark, k, &t, s).total_cost)
            .sum::<u64>() as f64
            / 300.0;
        assert!(mean <= mark_upper_bound_f64(&p) + 1e-9, "k={k}");
        assert!((mark_upper_bound(&p).to_f64().unwrap() - mark_upper_bound_f64(&p)).abs() < 1e-9);
        let opt = opt_flow(&t, k).unwrap().cost;
        assert_eq!(mark_new_requests_bound_holds(&p, opt, mean), Some(true));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fwf_flushes_once_per_phase(t in paging_strategy(8, 120), k in 1usize..6) {
        let p = partition(&t, k);
        let res = run(StrategySpec::Fwf, k, &t, 0);
        prop_assert_eq!(res.flushes(), p.numphases());
    }

    #[test]
    fn phase_bounds_hold(t in paging_strategy(8, 100), k in 1usize..6, seed in any::<u64>()) {
        let p = partition(&t, k);
        let opt_k = opt_flow(&t, k).unwrap().cost;
        for s in [StrategySpec::Lru, StrategySpec::Fifo, StrategySpec::Fwf, StrategySpec::Mark] {
            let cost = run(s, k, &t, seed).total_cost;
            prop_assert!(phase_cost_bound_holds(&p, cost), "{}", s);
            prop_assert!(new_requests_bound_holds(&p, opt_k, cost) != Some(false), "{}", s);
        }
        for h in 1..=k {
            let opt_h = opt_flow(&t, h).unwrap().cost as i64;
            prop_assert!(Rational64::from_integer(opt_h) >= opt_phase_lower_bound(&p, h));
        }
    }

    #[test]
    fn phases_shrink_by_a_quarter(t in paging_strategy(12, 150), k in 1usize..8) {
        prop_assert!(verify_phase_shrink(&t, k) != Some(false));
    }

    #[test]
    fn weights_do_not_change_phases(r in proptest::collection::vec(0u32..6, 0..60),
                                    w in proptest::collection::vec(1u64..9, 6), k in 1usize..5) {
        let t = RequestTrace::from_parts(&r, &w).unwrap();
        prop_assert_eq!(partition(&t, k), partition(&t.to_paging(), k));
    }
}
