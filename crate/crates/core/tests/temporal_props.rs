use proptest::prelude::*;

use tou_core::pricing::price_instance;
use tou_core::temporal::{partition_capacities, LayeredGraph, SlotGraph};
use tou_core::{Instance, Job, PriceCmp, PriceSchedule, Tolerances};

fn prices() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec((0u8..4).prop_map(f64::from), 1..60),
        prop::collection::vec(0.0f64..5.0, 1..60),
    ]
}

fn instance() -> impl Strategy<Value = Instance> {
    (2usize..=8, 1usize..=3).prop_flat_map(|(h, lmax)| {
        let job = (1..=h, 1..=lmax.min(h), 0..=h, 1u8..20, 1u8..=10).prop_map(
            move |(s, l, slack, v, q)| {
                let s = s.min(h + 1 - l);
                let d = (s + l - 1 + slack).min(h);
                (s, d, l, f64::from(v) / 2.0, f64::from(q) / 10.0)
            },
        );
        (
            prop::collection::vec(job, 1..8),
            prop::collection::vec(1usize..6, h),
            prop_oneof![Just(0.0), Just(0.2), Just(0.5)],
        )
            .prop_map(move |(jobs, caps, eps)| {
                let jobs = jobs
                    .into_iter()
                    .enumerate()
                    .map(|(i, (s, d, l, v, q))| Job::new(format!("j{i}"), s, d, l, v, q).unwrap())
                    .collect();
                Instance::new(jobs, h, caps, eps).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn slot_graph_bounds(p in prices()) {
        let g = SlotGraph::build(&p, PriceCmp::default()).unwrap();
        prop_assert!(g.max_in_degree() <= 3);
        prop_assert!(g.incoherent_slot().is_none());
        let layered = LayeredGraph::build(&PriceSchedule::new(p.clone()), 3, PriceCmp::default()).unwrap();
        prop_assert!(layered.max_in_degree() <= 4);
    }

    #[test]
    fn ancestors_are_price_monotone_chains(p in prices()) {
        let g = SlotGraph::build(&p, PriceCmp::default()).unwrap();
        for t in 1..=p.len() {
            let c = g.ancestors(t);
            prop_assert_eq!(c.last().copied(), Some(t));
            // every ancestor is at most as expensive as the target
            for &s in &c {
                prop_assert!(p[s - 1] <= p[t - 1] + 1e-9);
            }
            let mask = g.ancestor_mask(t);
            prop_assert_eq!(mask.iter().filter(|&&m| m).count(), c.len());
        }
    }

    #[test]
    fn partition_fits_capacity(inst in instance()) {
        let pricing = price_instance(&inst, &Tolerances::default()).unwrap();
        let blocks = partition_capacities(&inst, &pricing.assignment, inst.epsilon).unwrap();
        prop_assert!(blocks.violations(&inst.capacities).is_empty(), "{:?}", blocks.slot_usage());
    }
}
