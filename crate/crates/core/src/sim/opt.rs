//! Offline optimum for a realized job set.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Instance;

/// Largest realization solved exactly when lengths vary.
pub const GENERAL_OPT_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineOpt {
    pub welfare: f64,
    /// Start slot per realized job, in the order given.
    pub starts: Vec<Option<usize>>,
}

/// Maximum welfare over capacity-respecting assignments of `realized`.
pub fn offline_opt(inst: &Instance, realized: &[usize]) -> Result<OfflineOpt> {
    if realized.iter().all(|&j| inst.jobs[j].l == 1) {
        Ok(unit_opt(inst, realized))
    } else if realized.len() <= GENERAL_OPT_CAP {
        Ok(search_opt(inst, realized))
    } else {
        Err(Error::Cap(format!(
            "{} realized jobs with general lengths; compare against the LP bound instead",
            realized.len()
        )))
    }
}

struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

struct Flow {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Flow {
    fn new(n: usize) -> Flow {
        Flow {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, a: usize, b: usize, cap: i64, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to: b, cap, cost });
        self.adj[a].push(id);
        self.edges.push(Edge {
            to: a,
            cap: 0,
            cost: -cost,
        });
        self.adj[b].push(id + 1);
        id
    }

    /// Successive cheapest augmenting paths while they have negative cost.
    fn run(&mut self, s: usize, t: usize) -> f64 {
        let n = self.adj.len();
        let mut total = 0.0;
        loop {
            let mut dist = vec![f64::INFINITY; n];
            let mut via = vec![usize::MAX; n];
            dist[s] = 0.0;
            // Bellman-Ford; the residual graph has no negative cycles
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if dist[u] == f64::INFINITY {
                        continue;
                    }
                    for &e in &self.adj[u] {
                        let edge = &self.edges[e];
                        if edge.cap > 0 && dist[u] + edge.cost < dist[edge.to] - 1e-12 {
                            dist[edge.to] = dist[u] + edge.cost;
                            via[edge.to] = e;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[t] >= -1e-12 {
                return total;
            }
            let mut push = i64::MAX;
            let mut x = t;
            while x != s {
                let e = via[x];
                push = push.min(self.edges[e].cap);
                x = self.edges[e ^ 1].to;
            }
            let mut x = t;
            while x != s {
                let e = via[x];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                x = self.edges[e ^ 1].to;
            }
            total += push as f64 * dist[t];
        }
    }
}

/// Unit lengths: a capacitated assignment solved as min-cost flow over
/// classes of identical jobs.
fn unit_opt(inst: &Instance, realized: &[usize]) -> OfflineOpt {
    let h = inst.horizon;
    let mut classes: BTreeMap<(usize, usize, u64), Vec<usize>> = BTreeMap::new();
    for (k, &j) in realized.iter().enumerate() {
        let job = &inst.jobs[j];
        if let Some((lo, hi)) = job.window(h) {
            if job.v > 0.0 {
                classes
                    .entry((lo, hi, job.v.to_bits()))
                    .or_default()
                    .push(k);
            }
        }
    }
    let keys: Vec<_> = classes.keys().copied().collect();
    let c = keys.len();
    // source, classes, slots, sink
    let s = 0;
    let t = 1 + c + h;
    let mut f = Flow::new(t + 1);
    let mut class_slot: Vec<Vec<(usize, usize)>> = vec![Vec::new(); c];
    for (ci, &(lo, hi, vb)) in keys.iter().enumerate() {
        f.add(
            s,
            1 + ci,
            classes[&keys[ci]].len() as i64,
            -f64::from_bits(vb),
        );
        for slot in lo..=hi {
            let e = f.add(1 + ci, 1 + c + slot - 1, i64::MAX / 4, 0.0);
            class_slot[ci].push((slot, e));
        }
    }
    for slot in 1..=h {
        f.add(1 + c + slot - 1, t, inst.capacity(slot) as i64, 0.0);
    }
    let welfare = -f.run(s, t);
    let mut starts = vec![None; realized.len()];
    for (ci, key) in keys.iter().enumerate() {
        let mut members = classes[key].iter();
        for &(slot, e) in &class_slot[ci] {
            let used = f.edges[e ^ 1].cap;
            for _ in 0..used {
                if let Some(&k) = members.next() {
                    starts[k] = Some(slot);
                }
            }
        }
    }
    OfflineOpt { welfare, starts }
}

/// General lengths: depth-first search over starts with a value bound.
fn search_opt(inst: &Instance, realized: &[usize]) -> OfflineOpt {
    let h = inst.horizon;
    let mut order: Vec<usize> = (0..realized.len()).collect();
    order.sort_by(|&a, &b| {
        inst.jobs[realized[b]]
            .v
            .total_cmp(&inst.jobs[realized[a]].v)
    });
    let suffix: Vec<f64> = {
        let mut s = vec![0.0; order.len() + 1];
        for i in (0..order.len()).rev() {
            s[i] = s[i + 1] + inst.jobs[realized[order[i]]].v.max(0.0);
        }
        s
    };

    struct State<'a> {
        inst: &'a Instance,
        realized: &'a [usize],
        order: Vec<usize>,
        suffix: Vec<f64>,
        residual: Vec<usize>,
        current: Vec<Option<usize>>,
        best: f64,
        best_starts: Vec<Option<usize>>,
    }

    fn dfs(st: &mut State, depth: usize, value: f64, h: usize) {
        if value + st.suffix[depth] <= st.best + 1e-12 {
            return;
        }
        if depth == st.order.len() {
            st.best = value;
            st.best_starts = st.current.clone();
            return;
        }
        let k = st.order[depth];
        let job = st.inst.jobs[st.realized[k]].clone();
        if let Some((lo, hi)) = job.window(h) {
            for t in lo..=hi {
                if (t..t + job.l).all(|s| st.residual[s - 1] > 0) {
                    for s in t..t + job.l {
                        st.residual[s - 1] -= 1;
                    }
                    st.current[k] = Some(t);
                    dfs(st, depth + 1, value + job.v, h);
                    st.current[k] = None;
                    for s in t..t + job.l {
                        st.residual[s - 1] += 1;
                    }
                }
            }
        }
        dfs(st, depth + 1, value, h);
    }

    let mut st = State {
        inst,
        realized,
        order,
        suffix,
        residual: inst.capacities.clone(),
        current: vec![None; realized.len()],
        best: -1.0,
        best_starts: vec![None; realized.len()],
    };
    dfs(&mut st, 0, 0.0, h);
    OfflineOpt {
        welfare: st.best.max(0.0),
        starts: st.best_starts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Job;

    #[test]
    fn single_slot_three_jobs() {
        let jobs = vec![
            Job::new("a", 1, 1, 1, 5.0, 1.0).unwrap(),
            Job::new("b", 1, 1, 1, 3.0, 1.0).unwrap(),
            Job::new("c", 1, 1, 1, 1.0, 1.0).unwrap(),
        ];
        let inst = Instance::new(jobs, 1, vec![2], 0.0).unwrap();
        let o = offline_opt(&inst, &[0, 1, 2]).unwrap();
        assert!((o.welfare - 8.0).abs() < 1e-12);
        assert_eq!(o.starts, vec![Some(1), Some(1), None]);
        assert_eq!(offline_opt(&inst, &[]).unwrap().welfare, 0.0);
    }

    #[test]
    fn long_job_wins() {
        let jobs = vec![
            Job::new("j1", 1, 2, 2, 10.0, 1.0).unwrap(),
            Job::new("j2", 1, 2, 1, 6.0, 1.0).unwrap(),
        ];
        let inst = Instance::new(jobs, 2, vec![1, 1], 0.0).unwrap();
        let o = offline_opt(&inst, &[0, 1]).unwrap();
        assert_eq!(o.welfare, 10.0);
        assert_eq!(o.starts, vec![Some(1), None]);
    }

    #[test]
    fn general_cap() {
        let jobs: Vec<Job> = (0..11)
            .map(|i| Job::new(format!("j{i}"), 1, 3, 2, 1.0, 1.0).unwrap())
            .collect();
        let inst = Instance::new(jobs, 3, vec![1; 3], 0.0).unwrap();
        let all: Vec<usize> = (0..11).collect();
        assert!(matches!(offline_opt(&inst, &all), Err(Error::Cap(_))));
    }

    #[test]
    fn flow_matches_search_on_unit_jobs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let h = rng.random_range(1..=4);
            let n = rng.random_range(0..=8);
            let jobs: Vec<Job> = (0..n)
                .map(|i| {
                    let s = rng.random_range(1..=h);
                    let d = rng.random_range(s..=h);
                    Job::new(format!("j{i}"), s, d, 1, rng.random_range(1..6) as f64, 1.0).unwrap()
                })
                .collect();
            let caps = (0..h).map(|_| rng.random_range(1..=2)).collect();
            let inst = Instance::new(jobs, h, caps, 0.0).unwrap();
            let all: Vec<usize> = (0..n).collect();
            let a = unit_opt(&inst, &all);
            let b = search_opt(&inst, &all);
            assert!(
                (a.welfare - b.welfare).abs() < 1e-9,
                "{} vs {}",
                a.welfare,
                b.welfare
            );
            // the flow assignment is itself feasible and attains the value
            let mut used = vec![0; h];
            let mut w = 0.0;
            for (k, s) in a.starts.iter().enumerate() {
                if let Some(t) = s {
                    used[t - 1] += 1;
                    w += inst.jobs[k].v;
                }
            }
            assert!(used.iter().zip(&inst.capacities).all(|(u, c)| u <= c));
            assert!((w - a.welfare).abs() < 1e-9);
        }
    }
}
