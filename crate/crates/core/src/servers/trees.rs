//! Rooted subtrees, the tree of trees, the tree forwarding process and the
//! reduction of an adversarial routing to a single tree.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::seeds::{self, Stream};
use crate::stats::Proportion;

use super::network::{ArrivalModel, Multigraph, PathCollection, ServerNetwork};
use super::paths::{decompose_flow, remove_cycles, validate_min_work};

/// Which subtrees `enumerate_trees` returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeScope {
    /// Every node that can reach the root picks exactly one parent.
    Spanning,
    /// Every directed subtree containing the root.
    All,
}

/// In-tree toward `root`; `parent[i]` is `None` for the root and non-members.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RootedTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
}

impl RootedTree {
    pub fn singleton(n: usize, root: usize) -> RootedTree {
        RootedTree {
            root,
            parent: vec![None; n],
        }
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        i == self.root || self.parent[i].is_some()
    }

    pub fn size(&self) -> usize {
        (0..self.n()).filter(|&i| self.contains(i)).count()
    }

    /// Edges `(child, parent)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (i, p)))
            .collect()
    }

    /// Path from `i` up to the root, if `i` is a member.
    pub fn path_to_root(&self, i: usize) -> Option<Vec<usize>> {
        if !self.contains(i) {
            return None;
        }
        let mut path = vec![i];
        let mut x = i;
        while x != self.root {
            x = self.parent[x]?;
            path.push(x);
            if path.len() > self.n() {
                return None;
            }
        }
        Some(path)
    }

    /// Checks that members hang off the root without cycles.
    pub fn validate(&self) -> Result<()> {
        if self.root >= self.n() || self.parent[self.root].is_some() {
            return Err(Error::Contract(
                "root must be a member without a parent".into(),
            ));
        }
        for i in 0..self.n() {
            if let Some(p) = self.parent[i] {
                if p >= self.n() || !self.contains(p) {
                    return Err(Error::Contract(format!(
                        "node {i} hangs off non-member {p}"
                    )));
                }
                if self.path_to_root(i).is_none() {
                    return Err(Error::Contract(format!("node {i} does not reach the root")));
                }
            }
        }
        Ok(())
    }

    pub fn is_subgraph_of(&self, net: &ServerNetwork) -> bool {
        self.edges().iter().all(|&(c, p)| net.has_edge(c, p))
    }

    /// Members ordered deepest first.
    fn bottom_up(&self) -> Vec<usize> {
        let mut members: Vec<(usize, usize)> = (0..self.n())
            .filter_map(|i| self.path_to_root(i).map(|p| (p.len(), i)))
            .collect();
        members.sort_by(|a, b| b.cmp(a));
        members.into_iter().map(|(_, i)| i).collect()
    }
}

/// Forwards and loads of the tree process; entries of non-members are 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeProcess {
    /// `F_v = max(A_v + sum F_children - B_v, 0)`
    pub forwards: Vec<usize>,
    /// `F'_v = max(A_v + sum F_children - (B_v - 1), 0)`
    pub relaxed: Vec<usize>,
    /// `l_v = A_v + sum F_children`
    pub loads: Vec<usize>,
}

impl TreeProcess {
    pub fn overloaded(&self, v: usize, capacities: &[usize]) -> bool {
        self.loads[v] >= capacities[v]
    }
}

pub fn simulate_tree_process(
    tree: &RootedTree,
    capacities: &[usize],
    arrivals: &[usize],
) -> Result<TreeProcess> {
    tree.validate()?;
    let n = tree.n();
    if capacities.len() != n || arrivals.len() != n {
        return Err(Error::Contract(
            "capacities and arrivals must cover every node".into(),
        ));
    }
    let mut inflow = vec![0usize; n];
    let mut forwards = vec![0; n];
    let mut relaxed = vec![0; n];
    let mut loads = vec![0; n];
    for v in tree.bottom_up() {
        let l = arrivals[v] + inflow[v];
        loads[v] = l;
        forwards[v] = l.saturating_sub(capacities[v]);
        relaxed[v] = (l + 1).saturating_sub(capacities[v]);
        if let Some(p) = tree.parent[v] {
            inflow[p] += forwards[v];
        }
    }
    Ok(TreeProcess {
        forwards,
        relaxed,
        loads,
    })
}

/// Enumerates rooted subtrees of `net` toward `u`. Refuses networks with
/// more than `cap` nodes.
pub fn enumerate_trees(
    net: &ServerNetwork,
    u: usize,
    scope: TreeScope,
    cap: usize,
) -> Result<Vec<RootedTree>> {
    let n = net.n();
    if n > cap {
        return Err(Error::Cap(format!(
            "{n} nodes exceeds the tree enumeration cap of {cap}; use Monte-Carlo mode"
        )));
    }
    let reach = net.reaching(u);
    let nodes: Vec<usize> = (0..n).filter(|&i| reach[i]).collect();
    let choices: Vec<Vec<Option<usize>>> = nodes
        .iter()
        .map(|&i| {
            let mut c: Vec<Option<usize>> = Vec::new();
            if scope == TreeScope::All {
                c.push(None);
            }
            c.extend(
                net.out(i)
                    .iter()
                    .filter(|&&j| j == u || reach[j])
                    .map(|&j| Some(j)),
            );
            c
        })
        .collect();
    let combos = choices.iter().fold(1f64, |acc, c| acc * c.len() as f64);
    if combos > 1e7 {
        return Err(Error::Cap(format!(
            "{combos:.0} parent assignments to scan"
        )));
    }

    let mut out = Vec::new();
    let mut idx = vec![0usize; nodes.len()];
    loop {
        let mut tree = RootedTree::singleton(n, u);
        for (k, &i) in nodes.iter().enumerate() {
            tree.parent[i] = choices[k][idx[k]];
        }
        if tree.validate().is_ok() {
            out.push(tree);
        }
        // odometer
        let mut k = 0;
        loop {
            if k == nodes.len() {
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// One node per simple directed path ending at the root; node 0 is `[u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeOfTrees {
    /// `paths[k]` runs from its origin node to `u`.
    pub paths: Vec<Vec<usize>>,
    pub tree: RootedTree,
}

impl TreeOfTrees {
    pub fn origin(&self, k: usize) -> usize {
        self.paths[k][0]
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Per-node values of the network copied onto every path node.
    pub fn lift<T: Clone>(&self, values: &[T]) -> Vec<T> {
        self.paths.iter().map(|p| values[p[0]].clone()).collect()
    }

    /// Maps every member of `t` to the node of its root path, if the
    /// parent relation is preserved.
    pub fn embed(&self, t: &RootedTree) -> Option<Vec<(usize, usize)>> {
        let index: HashMap<&[usize], usize> = self
            .paths
            .iter()
            .enumerate()
            .map(|(k, p)| (p.as_slice(), k))
            .collect();
        let mut map = Vec::new();
        for i in 0..t.n() {
            if !t.contains(i) {
                continue;
            }
            let path = t.path_to_root(i)?;
            let k = *index.get(path.as_slice())?;
            if let Some(p) = t.parent[i] {
                let kp = *index.get(&path[1..])?;
                if self.tree.parent[k] != Some(kp) || t.path_to_root(p)? != path[1..] {
                    return None;
                }
            }
            map.push((i, k));
        }
        Some(map)
    }
}

pub fn build_tree_of_trees(net: &ServerNetwork, u: usize, cap: usize) -> Result<TreeOfTrees> {
    let mut paths: Vec<Vec<usize>> = vec![vec![u]];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut k = 0;
    while k < paths.len() {
        let head = paths[k][0];
        for &w in net.inn(head) {
            if paths[k].contains(&w) {
                continue;
            }
            if paths.len() >= cap {
                return Err(Error::Cap(format!(
                    "more than {cap} simple paths into node {u}"
                )));
            }
            let mut p = Vec::with_capacity(paths[k].len() + 1);
            p.push(w);
            p.extend_from_slice(&paths[k]);
            paths.push(p);
            parent.push(Some(k));
        }
        k += 1;
    }
    Ok(TreeOfTrees {
        tree: RootedTree { root: 0, parent },
        paths,
    })
}

/// Result of reducing an adversarial routing to a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeReduction {
    pub tree: RootedTree,
    /// The rerouted paths whose edge union is the tree.
    pub routed: PathCollection,
    pub routed_load: usize,
    /// Root load of the tree process on the tree with the same arrivals.
    pub tree_load: usize,
}

/// Turns a routing that overloads `u` into a tree toward `u` whose tree
/// process also overloads `u`.
pub fn reduce_to_tree(net: &ServerNetwork, pc: &PathCollection, u: usize) -> Result<TreeReduction> {
    let caps = &net.capacities;
    let n = net.n();
    if pc.loads()[u] < caps[u] {
        return Err(Error::Contract(format!(
            "node {u} is not overloaded by the given paths"
        )));
    }
    pc.check_walks(net)?;
    let acyclic = remove_cycles(pc, caps)?;
    let mut m = vec![vec![0usize; n]; n];
    for (&(i, j), &k) in &acyclic.multigraph().mult {
        m[i][j] = k;
    }
    // the root's forwards never come back to it
    for j in 0..n {
        m[u][j] = 0;
    }
    prune_dead_ends(&mut m, u);

    let order = to_multigraph(&m)
        .sinks_first_order()
        .ok_or_else(|| Error::Invariant("routing is cyclic after cycle removal".into()))?;
    for &v in &order {
        if v == u {
            continue;
        }
        loop {
            let outs: Vec<usize> = (0..n).filter(|&j| m[v][j] > 0).collect();
            if outs.len() <= 1 {
                break;
            }
            let keep = outs[0];
            let drop = outs[1];
            let kept = chain(&m, keep, u)?;
            let dropped = chain(&m, drop, u)?;
            let meet = *dropped
                .iter()
                .find(|x| kept.contains(x))
                .expect("both chains end at the root");
            m[v][drop] -= 1;
            for w in dropped.windows(2).take_while(|w| w[0] != meet) {
                m[w[0]][w[1]] -= 1;
            }
            m[v][keep] += 1;
            for w in kept.windows(2).take_while(|w| w[0] != meet) {
                m[w[0]][w[1]] += 1;
            }
            prune_dead_ends(&mut m, u);
        }
    }

    let mut tree = RootedTree::singleton(n, u);
    for (v, row) in m.iter().enumerate() {
        if let Some(j) = (0..n).find(|&j| row[j] > 0) {
            tree.parent[v] = Some(j);
        }
    }
    tree.validate()
        .map_err(|e| Error::Invariant(format!("reduction did not produce a tree: {e}")))?;
    let g = to_multigraph(&m);
    validate_min_work(&g, &pc.arrivals, caps)?;
    let routed = decompose_flow(&g, &pc.arrivals, caps)?;
    let routed_load = routed.loads()[u];
    if routed_load != pc.loads()[u] {
        return Err(Error::Invariant(format!(
            "root load changed from {} to {routed_load}",
            pc.loads()[u]
        )));
    }
    let tree_load = simulate_tree_process(&tree, caps, &pc.arrivals)?.loads[u];
    if tree_load < caps[u] {
        return Err(Error::Invariant(format!(
            "tree load {tree_load} is below B_u = {}",
            caps[u]
        )));
    }
    Ok(TreeReduction {
        tree,
        routed,
        routed_load,
        tree_load,
    })
}

fn to_multigraph(m: &[Vec<usize>]) -> Multigraph {
    let mut g = Multigraph::new(m.len());
    for (i, row) in m.iter().enumerate() {
        for (j, &k) in row.iter().enumerate() {
            g.add(i, j, k);
        }
    }
    g
}

/// Deletes every edge into a non-root node that forwards nothing, repeatedly.
fn prune_dead_ends(m: &mut [Vec<usize>], u: usize) {
    let n = m.len();
    loop {
        let mut changed = false;
        for v in 0..n {
            if v == u || m[v].iter().any(|&k| k > 0) {
                continue;
            }
            for row in m.iter_mut() {
                if row[v] > 0 {
                    row[v] = 0;
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// Follows unique out-edges from `x` to `u`.
fn chain(m: &[Vec<usize>], x: usize, u: usize) -> Result<Vec<usize>> {
    let mut path = vec![x];
    let mut cur = x;
    while cur != u {
        let outs: Vec<usize> = (0..m.len()).filter(|&j| m[cur][j] > 0).collect();
        if outs.len() != 1 {
            return Err(Error::Invariant(format!(
                "node {cur} below the current node has {} out-neighbors",
                outs.len()
            )));
        }
        cur = outs[0];
        path.push(cur);
        if path.len() > m.len() {
            return Err(Error::Invariant("chain does not terminate".into()));
        }
    }
    Ok(path)
}

/// Monte-Carlo estimate of `P[l_root >= B_root]` under independent arrivals.
pub fn tree_overload_probability(
    tree: &RootedTree,
    capacities: &[usize],
    models: &[ArrivalModel],
    trials: u64,
    seed: u64,
) -> Result<Proportion> {
    use rayon::prelude::*;
    tree.validate()?;
    let order = tree.bottom_up();
    let n = tree.n();
    let chunk = 1000u64;
    let chunks: Vec<u64> = (0..trials.div_ceil(chunk)).collect();
    let hits: Vec<u64> = chunks
        .par_iter()
        .map(|&c| {
            let mut rng = seeds::rng(seed, Stream::Arrivals, c);
            let mut inflow = vec![0usize; n];
            let mut hits = 0;
            for _ in c * chunk..((c + 1) * chunk).min(trials) {
                inflow.iter_mut().for_each(|x| *x = 0);
                let mut root_load = 0;
                for &v in &order {
                    let l = models[v].sample(&mut rng) + inflow[v];
                    match tree.parent[v] {
                        Some(p) => inflow[p] += l.saturating_sub(capacities[v]),
                        None => root_load = l,
                    }
                }
                if root_load >= capacities[tree.root] {
                    hits += 1;
                }
            }
            hits
        })
        .collect();
    Ok(Proportion {
        successes: hits.iter().sum(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero(n: usize) -> Vec<ArrivalModel> {
        vec![ArrivalModel::Deterministic { count: 0 }; n]
    }

    /// Four nodes 1..4 stored as 0..3; edges 2->1, 3->1, 2->3, 4->3, 4->2.
    fn routing_graph() -> ServerNetwork {
        ServerNetwork::new(
            vec![1, 2, 1, 1],
            zero(4),
            vec![(1, 0), (2, 0), (1, 2), (3, 2), (3, 1)],
        )
        .unwrap()
    }

    #[test]
    fn routing_graph_has_four_trees() {
        let net = routing_graph();
        let trees = enumerate_trees(&net, 0, TreeScope::Spanning, 8).unwrap();
        assert_eq!(trees.len(), 4);
        let best = trees
            .iter()
            .map(|t| {
                simulate_tree_process(t, &net.capacities, &[0, 3, 0, 3])
                    .unwrap()
                    .loads[0]
            })
            .max()
            .unwrap();
        assert_eq!(best, 3);
    }

    #[test]
    fn single_node_has_one_tree() {
        let net = ServerNetwork::new(vec![1], zero(1), vec![]).unwrap();
        let trees = enumerate_trees(&net, 0, TreeScope::All, 8).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].size(), 1);
    }

    #[test]
    fn path_graph_subtrees() {
        // a=0 -> b=1 -> u=2
        let net = ServerNetwork::new(vec![1; 3], zero(3), vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(
            enumerate_trees(&net, 2, TreeScope::All, 8).unwrap().len(),
            3
        );
        assert_eq!(
            enumerate_trees(&net, 2, TreeScope::Spanning, 8)
                .unwrap()
                .len(),
            1
        );
        assert!(matches!(
            enumerate_trees(&net, 2, TreeScope::All, 2),
            Err(Error::Cap(_))
        ));
    }

    #[test]
    fn tree_process_example() {
        // v = 0 with children 1, 2
        let t = RootedTree {
            root: 0,
            parent: vec![None, Some(0), Some(0)],
        };
        let p = simulate_tree_process(&t, &[1, 1, 1], &[1, 2, 0]).unwrap();
        assert_eq!(p.forwards[1], 1);
        assert_eq!(p.loads[0], 2);
        assert_eq!(p.relaxed[0], 2);
        let idle = simulate_tree_process(&t, &[1, 1, 1], &[0, 0, 0]).unwrap();
        assert!(idle.relaxed.iter().all(|&f| f == 0));
        let leaf = simulate_tree_process(&t, &[5, 3, 5], &[0, 3, 0]).unwrap();
        assert_eq!(leaf.relaxed[1], 1);
    }

    #[test]
    fn tree_process_rejects_cycles() {
        let t = RootedTree {
            root: 0,
            parent: vec![None, Some(2), Some(1)],
        };
        assert!(simulate_tree_process(&t, &[1; 3], &[0; 3]).is_err());
    }

    #[test]
    fn tree_of_trees_contains_every_tree() {
        let net = routing_graph();
        let tt = build_tree_of_trees(&net, 0, 1000).unwrap();
        // [1], 2->1, 3->1, 3->2->1, 4->3->1, 4->2->1, 4->2->3->1 (1-indexed)
        assert_eq!(tt.len(), 7);
        for t in enumerate_trees(&net, 0, TreeScope::All, 8).unwrap() {
            assert!(tt.embed(&t).is_some());
        }
    }

    #[test]
    fn tree_of_a_tree_is_itself() {
        let net = ServerNetwork::new(vec![1; 4], zero(4), vec![(1, 0), (2, 0), (3, 1)]).unwrap();
        let tt = build_tree_of_trees(&net, 0, 100).unwrap();
        assert_eq!(tt.len(), 4);
        assert!(matches!(
            build_tree_of_trees(&net, 0, 2),
            Err(Error::Cap(_))
        ));
    }

    #[test]
    fn reduction_on_routing_graph() {
        let net = routing_graph();
        // node 2 (idx 1) serves two and forwards one to 1 (idx 0);
        // node 4 (idx 3) serves one, forwards two through 3 (idx 2) and 2 to 1
        let pc = PathCollection::from_paths(
            4,
            vec![
                vec![1],
                vec![1],
                vec![1, 0],
                vec![3],
                vec![3, 2],
                vec![3, 2, 0],
            ],
        );
        assert_eq!(pc.loads()[0], 2);
        let red = reduce_to_tree(&net, &pc, 0).unwrap();
        assert!(red.tree_load >= 1);
        assert!(red.tree.is_subgraph_of(&net));
    }

    #[test]
    fn reduction_of_local_overload_is_trivial() {
        let net = ServerNetwork::new(vec![2, 1, 1], zero(3), vec![(1, 0), (2, 0)]).unwrap();
        let pc = PathCollection::from_paths(3, vec![vec![0], vec![0]]);
        let red = reduce_to_tree(&net, &pc, 0).unwrap();
        assert_eq!(red.tree.size(), 1);
        assert_eq!(red.tree_load, 2);
        let idle = PathCollection::from_paths(3, vec![vec![0]]);
        assert!(matches!(
            reduce_to_tree(&net, &idle, 0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn reduction_merges_two_branches() {
        // 3 -> 1 -> 0 and 3 -> 2 -> 0, node 3 forwards two jobs split across
        let net = ServerNetwork::new(
            vec![2, 1, 1, 1],
            zero(4),
            vec![(1, 0), (2, 0), (3, 1), (3, 2)],
        )
        .unwrap();
        let pc = PathCollection::from_paths(
            4,
            vec![vec![3], vec![3, 1, 0], vec![3, 2, 0], vec![1], vec![2]],
        );
        let red = reduce_to_tree(&net, &pc, 0).unwrap();
        assert_eq!(red.routed_load, 2);
        assert!(red.tree_load >= 2);
        assert_eq!(red.tree.edges().iter().filter(|e| e.0 == 3).count(), 1);
    }
}
