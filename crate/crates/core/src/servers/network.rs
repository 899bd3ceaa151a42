//! Server networks, arrival models, multigraphs and path collections.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of the number of external arrivals at a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ArrivalModel {
    Deterministic {
        count: usize,
    },
    /// Sum of independent Bernoulli variables with the given means.
    BernoulliSum {
        probs: Vec<f64>,
    },
    Binomial {
        n: usize,
        p: f64,
    },
    /// Uniform draw from observed counts; no closed-form MGF.
    Empirical {
        samples: Vec<usize>,
    },
}

impl ArrivalModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ArrivalModel::Deterministic { .. } => true,
            ArrivalModel::BernoulliSum { probs } => probs.iter().all(|p| (0.0..=1.0).contains(p)),
            ArrivalModel::Binomial { p, .. } => (0.0..=1.0).contains(p),
            ArrivalModel::Empirical { samples } => !samples.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("bad arrival model {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ArrivalModel::Deterministic { count } => *count as f64,
            ArrivalModel::BernoulliSum { probs } => probs.iter().sum(),
            ArrivalModel::Binomial { n, p } => *n as f64 * p,
            ArrivalModel::Empirical { samples } => {
                samples.iter().sum::<usize>() as f64 / samples.len() as f64
            }
        }
    }

    /// `ln E[exp(theta A)]` in closed form.
    pub fn log_mgf(&self, theta: f64) -> Result<f64> {
        let bern = |p: f64| (1.0 - p + p * theta.exp()).ln();
        match self {
            ArrivalModel::Deterministic { count } => Ok(theta * *count as f64),
            ArrivalModel::BernoulliSum { probs } => Ok(probs.iter().map(|&p| bern(p)).sum()),
            ArrivalModel::Binomial { n, p } => Ok(*n as f64 * bern(*p)),
            ArrivalModel::Empirical { .. } => Err(Error::Unsupported(
                "no closed-form MGF for empirical arrivals; use the empirical MGF estimate".into(),
            )),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            ArrivalModel::Deterministic { count } => *count,
            ArrivalModel::BernoulliSum { probs } => {
                probs.iter().filter(|&&p| rng.random_bool(p)).count()
            }
            ArrivalModel::Binomial { n, p } => Binomial::new(*n as u64, *p)
                .expect("validated binomial")
                .sample(rng) as usize,
            ArrivalModel::Empirical { samples } => samples[rng.random_range(0..samples.len())],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerNetwork {
    pub ids: Vec<String>,
    pub capacities: Vec<usize>,
    pub arrivals: Vec<ArrivalModel>,
    /// Deduplicated directed edges, sorted.
    pub edges: Vec<(usize, usize)>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl ServerNetwork {
    pub fn new(
        capacities: Vec<usize>,
        arrivals: Vec<ArrivalModel>,
        edges: Vec<(usize, usize)>,
    ) -> Result<ServerNetwork> {
        let ids = (0..capacities.len()).map(|i| i.to_string()).collect();
        ServerNetwork::with_ids(ids, capacities, arrivals, edges)
    }

    pub fn with_ids(
        ids: Vec<String>,
        capacities: Vec<usize>,
        arrivals: Vec<ArrivalModel>,
        mut edges: Vec<(usize, usize)>,
    ) -> Result<ServerNetwork> {
        let n = capacities.len();
        if ids.len() != n || arrivals.len() != n {
            return Err(Error::Invalid(
                "ids, capacities and arrivals differ in length".into(),
            ));
        }
        if capacities.contains(&0) {
            return Err(Error::Invalid("capacities must be at least 1".into()));
        }
        for a in &arrivals {
            a.validate()?;
        }
        for &(i, j) in &edges {
            if i >= n || j >= n {
                return Err(Error::Invalid(format!(
                    "edge ({i}, {j}) references a missing node"
                )));
            }
            if i == j {
                return Err(Error::Invalid(format!("self-loop at node {i}")));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for &(i, j) in &edges {
            out_adj[i].push(j);
            in_adj[j].push(i);
        }
        Ok(ServerNetwork {
            ids,
            capacities,
            arrivals,
            edges,
            out_adj,
            in_adj,
        })
    }

    pub fn n(&self) -> usize {
        self.capacities.len()
    }

    pub fn out(&self, i: usize) -> &[usize] {
        &self.out_adj[i]
    }

    pub fn inn(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out_adj[i].binary_search(&j).is_ok()
    }

    pub fn d_max(&self) -> usize {
        self.in_adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Nodes with a directed path to `u` (excluding `u`).
    pub fn reaching(&self, u: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            for &w in self.inn(x) {
                if w != u && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    pub fn sample_arrivals<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.arrivals.iter().map(|a| a.sample(rng)).collect()
    }
}

/// Directed multigraph over `n` nodes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Multigraph {
    pub n: usize,
    pub mult: BTreeMap<(usize, usize), usize>,
}

impl Multigraph {
    pub fn new(n: usize) -> Multigraph {
        Multigraph {
            n,
            mult: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, k: usize) {
        if k > 0 {
            *self.mult.entry((i, j)).or_insert(0) += k;
        }
    }

    pub fn remove(&mut self, i: usize, j: usize, k: usize) {
        let e = self.mult.get_mut(&(i, j)).expect("edge present");
        assert!(*e >= k, "removing more copies than present");
        *e -= k;
        if *e == 0 {
            self.mult.remove(&(i, j));
        }
    }

    pub fn count(&self, i: usize, j: usize) -> usize {
        self.mult.get(&(i, j)).copied().unwrap_or(0)
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for (&(i, _), &k) in &self.mult {
            d[i] += k;
        }
        d
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for (&(_, j), &k) in &self.mult {
            d[j] += k;
        }
        d
    }

    pub fn total(&self) -> usize {
        self.mult.values().sum()
    }

    /// One directed cycle, as its node sequence, if any.
    pub fn find_cycle(&self) -> Option<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in self.mult.keys() {
            adj[i].push(j);
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.n];
        let mut parent = vec![usize::MAX; self.n];
        for start in 0..self.n {
            if state[start] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            state[start] = 1;
            while let Some(&mut (x, ref mut next)) = stack.last_mut() {
                if *next < adj[x].len() {
                    let y = adj[x][*next];
                    *next += 1;
                    match state[y] {
                        0 => {
                            state[y] = 1;
                            parent[y] = x;
                            stack.push((y, 0));
                        }
                        1 => {
                            let mut cyc = vec![x];
                            let mut c = x;
                            while c != y {
                                c = parent[c];
                                cyc.push(c);
                            }
                            cyc.reverse();
                            return Some(cyc);
                        }
                        _ => {}
                    }
                } else {
                    state[x] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Sinks-first topological order, or `None` if cyclic.
    pub fn sinks_first_order(&self) -> Option<Vec<usize>> {
        let mut out_deg = vec![0usize; self.n];
        let mut preds = vec![Vec::new(); self.n];
        for &(i, j) in self.mult.keys() {
            out_deg[i] += 1;
            preds[j].push(i);
        }
        let mut ready: Vec<usize> = (0..self.n).filter(|&i| out_deg[i] == 0).rev().collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(x) = ready.pop() {
            order.push(x);
            for &p in &preds[x] {
                out_deg[p] -= 1;
                if out_deg[p] == 0 {
                    ready.push(p);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }
}

/// Realized arrivals and the walks jobs took; `paths[k][0]` is the entry.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathCollection {
    pub arrivals: Vec<usize>,
    pub paths: Vec<Vec<usize>>,
}

impl PathCollection {
    pub fn from_paths(n: usize, paths: Vec<Vec<usize>>) -> PathCollection {
        let mut arrivals = vec![0; n];
        for p in &paths {
            arrivals[p[0]] += 1;
        }
        PathCollection { arrivals, paths }
    }

    pub fn n(&self) -> usize {
        self.arrivals.len()
    }

    pub fn multigraph(&self) -> Multigraph {
        let mut g = Multigraph::new(self.n());
        for p in &self.paths {
            for w in p.windows(2) {
                g.add(w[0], w[1], 1);
            }
        }
        g
    }

    /// `l_i = a_i + in(i)`: visits of every node, counted with repetition.
    pub fn loads(&self) -> Vec<usize> {
        let mut l = vec![0; self.n()];
        for p in &self.paths {
            for &i in p {
                l[i] += 1;
            }
        }
        l
    }

    pub fn overloaded(&self, capacities: &[usize]) -> Vec<bool> {
        self.loads()
            .iter()
            .zip(capacities)
            .map(|(l, b)| l >= b)
            .collect()
    }

    /// Every path is a walk in the network.
    pub fn check_walks(&self, net: &ServerNetwork) -> Result<()> {
        for (k, p) in self.paths.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::Invalid(format!("path {k} is empty")));
            }
            for w in p.windows(2) {
                if !net.has_edge(w[0], w[1]) {
                    return Err(Error::Invalid(format!(
                        "path {k} uses missing edge ({}, {})",
                        w[0], w[1]
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_max_and_reachability() {
        let net = ServerNetwork::new(
            vec![1; 4],
            vec![ArrivalModel::Deterministic { count: 0 }; 4],
            vec![(1, 0), (2, 0), (1, 2), (3, 2), (3, 1), (1, 0)],
        )
        .unwrap();
        assert_eq!(net.edges.len(), 5);
        assert_eq!(net.d_max(), 2);
        assert_eq!(net.reaching(0), vec![false, true, true, true]);
        assert_eq!(net.reaching(3), vec![false; 4]);
    }

    #[test]
    fn rejects_self_loops() {
        let r = ServerNetwork::new(
            vec![1],
            vec![ArrivalModel::Deterministic { count: 0 }],
            vec![(0, 0)],
        );
        assert!(r.is_err());
    }

    #[test]
    fn cycle_detection() {
        let mut g = Multigraph::new(3);
        g.add(0, 1, 1);
        g.add(1, 2, 2);
        assert!(g.find_cycle().is_none());
        assert_eq!(g.sinks_first_order().unwrap()[0], 2);
        g.add(2, 0, 1);
        let c = g.find_cycle().unwrap();
        assert_eq!(c.len(), 3);
        assert!(g.sinks_first_order().is_none());
    }

    #[test]
    fn arrival_model_json_shape() {
        let m = ArrivalModel::Binomial { n: 10, p: 0.5 };
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"kind":"binomial","params":{"n":10,"p":0.5}}"#);
        let back: ArrivalModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn closed_form_mgfs() {
        let d = ArrivalModel::Deterministic { count: 3 };
        assert!((d.log_mgf(0.5).unwrap() - 1.5).abs() < 1e-15);
        let b = ArrivalModel::Binomial { n: 4, p: 0.25 };
        let s = ArrivalModel::BernoulliSum {
            probs: vec![0.25; 4],
        };
        assert!((b.log_mgf(0.3).unwrap() - s.log_mgf(0.3).unwrap()).abs() < 1e-12);
        assert!(ArrivalModel::Empirical { samples: vec![1] }
            .log_mgf(0.1)
            .is_err());
    }
}
