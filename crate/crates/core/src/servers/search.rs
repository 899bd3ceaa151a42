//! Exhaustive adversarial routing for tiny networks.
//!
//! Only residual capacities matter to the outcome, so the search runs over
//! states `(residual capacities, unplaced arrivals)`. A job entering a node
//! with spare capacity is served there. A job entering a full node either
//! gives up or is walked through full nodes to some node with spare
//! capacity, where it is served.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

use super::network::{PathCollection, ServerNetwork};

/// Largest state space the search will explore.
pub const STATE_CAP: f64 = 5e6;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Move {
    entry: usize,
    path: Vec<usize>,
    /// Node whose capacity the job consumed.
    served_at: Option<usize>,
}

struct Search<'a> {
    net: &'a ServerNetwork,
    n: usize,
}

impl<'a> Search<'a> {
    fn new(net: &'a ServerNetwork, arrivals: &[usize]) -> Result<Search<'a>> {
        let n = net.n();
        if arrivals.len() != n {
            return Err(Error::Contract("one arrival count per node".into()));
        }
        let space: f64 = (0..n)
            .map(|i| ((net.capacities[i] + 1) * (arrivals[i] + 1)) as f64)
            .product();
        if space > STATE_CAP {
            return Err(Error::Cap(format!(
                "exhaustive search over ~{space:.0} states; use a sampled adversary instead"
            )));
        }
        Ok(Search { net, n })
    }

    fn initial(&self, arrivals: &[usize]) -> Vec<u16> {
        let mut s: Vec<u16> = self.net.capacities.iter().map(|&b| b as u16).collect();
        s.extend(arrivals.iter().map(|&a| a as u16));
        s
    }

    /// Moves for the next job entering at `i`.
    fn moves(&self, state: &[u16], i: usize) -> Vec<Move> {
        if state[i] > 0 {
            return vec![Move {
                entry: i,
                path: vec![i],
                served_at: Some(i),
            }];
        }
        let mut out = vec![Move {
            entry: i,
            path: vec![i],
            served_at: None,
        }];
        // BFS through full nodes
        let mut prev = vec![usize::MAX; self.n];
        prev[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(x) = queue.pop_front() {
            for &w in self.net.out(x) {
                if prev[w] != usize::MAX {
                    continue;
                }
                prev[w] = x;
                if state[w] > 0 {
                    let mut path = vec![w];
                    let mut c = w;
                    while c != i {
                        c = prev[c];
                        path.push(c);
                    }
                    path.reverse();
                    out.push(Move {
                        entry: i,
                        path,
                        served_at: Some(w),
                    });
                } else {
                    queue.push_back(w);
                }
            }
        }
        out
    }

    fn apply(&self, state: &[u16], m: &Move) -> Vec<u16> {
        let mut s = state.to_vec();
        s[self.n + m.entry] -= 1;
        if let Some(w) = m.served_at {
            s[w] -= 1;
        }
        s
    }

    fn entries<'s>(&self, state: &'s [u16]) -> impl Iterator<Item = usize> + 's {
        let n = self.n;
        (0..n).filter(move |&i| state[n + i] > 0)
    }
}

/// Whether some adversary fills node `u`, with a witness routing.
pub fn exhaustive_overload(
    net: &ServerNetwork,
    arrivals: &[usize],
    u: usize,
) -> Result<Option<PathCollection>> {
    let search = Search::new(net, arrivals)?;
    let mut memo: HashMap<Vec<u16>, bool> = HashMap::new();

    fn can_fill(
        search: &Search,
        u: usize,
        state: &[u16],
        memo: &mut HashMap<Vec<u16>, bool>,
    ) -> bool {
        if state[u] == 0 {
            return true;
        }
        if let Some(&v) = memo.get(state) {
            return v;
        }
        let mut found = false;
        'outer: for i in search.entries(state).collect::<Vec<_>>() {
            for m in search.moves(state, i) {
                if can_fill(search, u, &search.apply(state, &m), memo) {
                    found = true;
                    break 'outer;
                }
            }
        }
        memo.insert(state.to_vec(), found);
        found
    }

    let mut state = search.initial(arrivals);
    if !can_fill(&search, u, &state, &mut memo) {
        return Ok(None);
    }
    let mut paths = Vec::new();
    while state[u] > 0 {
        let (m, next) = search
            .entries(&state)
            .flat_map(|i| search.moves(&state, i))
            .map(|m| {
                let next = search.apply(&state, &m);
                (m, next)
            })
            .find(|(_, next)| can_fill(&search, u, next, &mut memo))
            .ok_or_else(|| {
                Error::Invariant("witness reconstruction lost the winning move".into())
            })?;
        paths.push(m.path);
        state = next;
    }
    // everyone else is served where they enter, or gives up there
    for i in 0..search.n {
        while state[search.n + i] > 0 {
            let m = search.moves(&state, i).swap_remove(0);
            state = search.apply(&state, &m);
            paths.push(m.path);
        }
    }
    Ok(Some(PathCollection {
        arrivals: arrivals.to_vec(),
        paths,
    }))
}

/// Worst-case routing for first-node service.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstRouting {
    pub failures: usize,
    pub paths: PathCollection,
    /// Per path: served at its entry node.
    pub first_node_ok: Vec<bool>,
    pub served_at: Vec<Option<usize>>,
}

/// Maximizes the number of jobs not served where they enter over all job
/// orders and forwarding choices.
pub fn exhaustive_first_node_failures(
    net: &ServerNetwork,
    arrivals: &[usize],
) -> Result<WorstRouting> {
    let search = Search::new(net, arrivals)?;
    let mut memo: HashMap<Vec<u16>, u32> = HashMap::new();

    fn best(search: &Search, state: &[u16], memo: &mut HashMap<Vec<u16>, u32>) -> u32 {
        if let Some(&v) = memo.get(state) {
            return v;
        }
        let mut value = 0;
        for i in search.entries(state).collect::<Vec<_>>() {
            let fail = u32::from(state[i] == 0);
            for m in search.moves(state, i) {
                value = value.max(fail + best(search, &search.apply(state, &m), memo));
            }
        }
        memo.insert(state.to_vec(), value);
        value
    }

    let mut state = search.initial(arrivals);
    let total = best(&search, &state, &mut memo);
    let mut remaining = total;
    let mut paths = Vec::new();
    let mut first_node_ok = Vec::new();
    let mut served_at = Vec::new();
    while search.entries(&state).next().is_some() {
        let mut chosen = None;
        for i in search.entries(&state).collect::<Vec<_>>() {
            let fail = u32::from(state[i] == 0);
            for m in search.moves(&state, i) {
                let next = search.apply(&state, &m);
                if fail + best(&search, &next, &mut memo) == remaining {
                    chosen = Some((m, next, fail));
                    break;
                }
            }
            if chosen.is_some() {
                break;
            }
        }
        let (m, next, fail) = chosen.ok_or_else(|| {
            Error::Invariant("witness reconstruction lost the optimal move".into())
        })?;
        remaining -= fail;
        first_node_ok.push(fail == 0);
        served_at.push(m.served_at);
        paths.push(m.path);
        state = next;
    }
    Ok(WorstRouting {
        failures: total as usize,
        paths: PathCollection {
            arrivals: arrivals.to_vec(),
            paths,
        },
        first_node_ok,
        served_at,
    })
}
