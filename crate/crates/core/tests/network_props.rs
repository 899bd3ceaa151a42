use proptest::prelude::*;

use tou_core::servers::{
    build_tree_of_trees, decompose_flow, enumerate_trees, exhaustive_overload, reduce_to_tree,
    remove_cycles, simulate_tree_process, validate_min_work, ArrivalModel, Multigraph,
    ServerNetwork, TreeScope,
};

fn min_work(g: &Multigraph, a: &[usize], b: &[usize]) -> bool {
    let out = g.out_degrees();
    let inn = g.in_degrees();
    (0..g.n).all(|i| out[i] + b[i] <= inn[i] + a[i] || out[i] == 0)
}

fn multigraph() -> impl Strategy<Value = (Multigraph, Vec<usize>, Vec<usize>)> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec((0..n, 0..n), 0..14),
            prop::collection::vec(0usize..4, n),
            prop::collection::vec(1usize..3, n),
        )
            .prop_map(move |(edges, a, b)| {
                let mut g = Multigraph::new(n);
                for (i, j) in edges {
                    if i != j {
                        g.add(i, j, 1);
                    }
                }
                (g, a, b)
            })
    })
}

/// Forwards only from nodes holding more than their capacity, so min-work
/// holds by construction.
fn forwarding() -> impl Strategy<Value = (Multigraph, Vec<usize>, Vec<usize>)> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec((0..n, 0..n), 0..30),
            prop::collection::vec(0usize..5, n),
            prop::collection::vec(1usize..3, n),
        )
            .prop_map(move |(moves, a, b)| {
                let mut g = Multigraph::new(n);
                let mut held = a.clone();
                for (i, j) in moves {
                    if i != j && held[i] > b[i] {
                        held[i] -= 1;
                        held[j] += 1;
                        g.add(i, j, 1);
                    }
                }
                (g, a, b)
            })
    })
}

fn network() -> impl Strategy<Value = (ServerNetwork, Vec<usize>)> {
    (2usize..=5).prop_flat_map(|n| {
        (
            prop::collection::vec(1usize..3, n),
            prop::collection::vec(0usize..3, n),
            prop::collection::vec(any::<bool>(), n * n),
        )
            .prop_map(move |(caps, a, mask)| {
                let edges = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| i != j && mask[i * n + j])
                    .collect();
                let models = a
                    .iter()
                    .map(|&count| ArrivalModel::Deterministic { count })
                    .collect();
                (ServerNetwork::new(caps, models, edges).unwrap(), a)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn decomposition_exists_exactly_under_min_work((g, a, b) in multigraph()) {
        let expected = min_work(&g, &a, &b);
        prop_assert_eq!(validate_min_work(&g, &a, &b).is_ok(), expected);
        match decompose_flow(&g, &a, &b) {
            Ok(pc) => {
                prop_assert!(expected);
                prop_assert_eq!(pc.multigraph().mult, g.mult.clone());
                prop_assert_eq!(pc.paths.len(), a.iter().sum::<usize>());
            }
            Err(_) => prop_assert!(!expected),
        }
    }

    #[test]
    fn cycle_removal_keeps_overloads((g, a, b) in forwarding()) {
        let pc = decompose_flow(&g, &a, &b).unwrap();
        let acyclic = remove_cycles(&pc, &b).unwrap();
        prop_assert_eq!(acyclic.overloaded(&b), pc.overloaded(&b));
        let simple = acyclic.paths.iter().all(|p| {
            let mut s = p.clone();
            s.sort_unstable();
            s.dedup();
            s.len() == p.len()
        });
        prop_assert!(simple);
    }

    #[test]
    fn overloads_reduce_to_trees((net, a) in network()) {
        for u in 0..net.n() {
            if let Some(pc) = exhaustive_overload(&net, &a, u).unwrap() {
                let red = reduce_to_tree(&net, &pc, u).unwrap();
                prop_assert!(red.tree.is_subgraph_of(&net));
                let process = simulate_tree_process(&red.tree, &net.capacities, &a).unwrap();
                prop_assert_eq!(process.loads[u], red.tree_load);
                prop_assert!(red.tree_load >= net.capacities[u]);
            }
        }
    }

    #[test]
    fn tree_of_trees_dominates_every_tree((net, a) in network()) {
        let u = 0;
        let tot = build_tree_of_trees(&net, u, 2000).unwrap();
        let caps = tot.lift(&net.capacities);
        let arrivals = tot.lift(&a);
        let top = simulate_tree_process(&tot.tree, &caps, &arrivals).unwrap().loads[0];
        for t in enumerate_trees(&net, u, TreeScope::All, 5000).unwrap() {
            let load = simulate_tree_process(&t, &net.capacities, &a).unwrap().loads[u];
            prop_assert!(top >= load, "tree-of-trees load {} below {}", top, load);
            prop_assert!(tot.embed(&t).is_some());
        }
    }
}
